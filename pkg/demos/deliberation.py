"""Explore a topic, then run mentor/researcher rounds with scripted models.

The mock mentor asks questions until round 2, then accepts.

    python demos/deliberation.py
"""

from motivkg import EdgeKind, HashEmbedder, MotivGraph, NodeKind, Toolbox, VectorIndex, deliberate, explore, mock_gateway
from motivkg import mock

g = MotivGraph()
p = g.add_node(NodeKind.PROBLEM, "Long document question answering", "Evidence spans many pages.")
c = g.add_node(NodeKind.CHALLENGE, "Error accumulation in long reasoning chains", "Early slips propagate.")
s = g.add_node(NodeKind.SOLUTION, "Step level verifier for reranking", "Score each step and rerank.")
g.add_edge(EdgeKind.PROBLEM_CHALLENGE, p, c)
g.add_edge(EdgeKind.CHALLENGE_SOLUTION, c, s)
emb = HashEmbedder(64)
index = VectorIndex(emb.dim)
for n in g.nodes():
    index.add(n.id, emb.embed(n.description), n.name)
tools = Toolbox(g, index, emb, rng_seed=0)

topic = "long document reasoning"
researcher = mock_gateway(mock.researcher)
log, idea = explore(topic, researcher, tools)
print("tools used:", [e.call.tool for e in log.tool_events if e.call])
print("first draft:", idea.title)

transcript = deliberate(idea, researcher, mock_gateway(mock.mentor(accept_round=2)), tools, topic=topic, max_rounds=4)
for r in transcript.rounds:
    print(f"round {r.index}: {r.mentor.decision.value} ({r.mentor.axis.value}) {r.mentor.question}")
print("verdict:", transcript.verdict.value, "| final revision:", transcript.final_idea.revision)
print("groundings:", [(gr.href, gr.resolved) for gr in transcript.final_idea.groundings])
