"""Build a small graph from two toy papers, then grow a challenge hierarchy.

The mock extractor reads "Kind: name | description" lines; the mock merger
groups nodes whose names share a content word.

    python demos/graph_and_hierarchy.py
"""

from motivkg import HashEmbedder, MotivGraph, NodeKind, VectorIndex, ingest_paper, mock_gateway, run_until_stable
from motivkg import mock
from motivkg.hierarchy import summarize

PAPERS = {
    "retrieval": """
Problem: Open domain question answering over large corpora | Answer questions from millions of passages.
Challenge: Retrieval noise from lexically similar passages | Distractor passages share words with the answer.
Solution: Dense passage reranking with cross attention scoring | Rerank candidates with a joint encoder.
""",
    "summaries": """
Problem: Faithful abstractive summarization of news | Summaries must not invent facts.
Challenge: Retrieval noise in grounding documents | Retrieved context contains off-topic passages.
Solution: Entailment filtered decoding with sentence level checks | Drop sentences an entailment model rejects.
""",
}

graph = MotivGraph()
embedder = HashEmbedder(64)
index = VectorIndex(embedder.dim)
extractor = mock_gateway(mock.extractor)
for paper, text in PAPERS.items():
    report = ingest_paper(graph, index, embedder, text, paper, extractor)
    print(f"{paper}: {report.triples} triples, {len(report.nodes_created)} new nodes")

for t in graph.list_triples():
    print("  " + " -> ".join(graph.node(i).name for i in (t.problem, t.challenge, t.solution)))

reports = run_until_stable(graph, index, embedder, NodeKind.CHALLENGE, mock_gateway(mock.merger), k=3)
print("hierarchy:", summarize(reports))
for node in graph.nodes(NodeKind.CHALLENGE):
    if node.level:
        kids = ", ".join(graph.node(c).name for c in graph.children(node.id))
        print(f"  {node.name} (level {node.level}) <- {kids}")
print("violations:", graph.validate_graph())
