"""Parse a fenced tool call and run it against a tiny graph.

    python demos/tool_protocol.py
"""

from motivkg import EdgeKind, HashEmbedder, MotivGraph, NodeKind, Toolbox, VectorIndex, parse_tool_call
from motivkg.tools import StubLiterature

g = MotivGraph()
p = g.add_node(NodeKind.PROBLEM, "LLM Compression", "Making large language models smaller.")
c = g.add_node(NodeKind.CHALLENGE, "Accuracy loss after quantization", "Low-bit weights hurt quality.")
s = g.add_node(NodeKind.SOLUTION, "DistilledLM", "Distil a teacher into a compact student.")
g.add_edge(EdgeKind.PROBLEM_CHALLENGE, p, c)
g.add_edge(EdgeKind.CHALLENGE_SOLUTION, c, s)

emb = HashEmbedder(64)
index = VectorIndex(emb.dim)
for n in g.nodes():
    index.add(n.id, emb.embed(n.description), n.name)
papers = [{"title": "Quantized transformers", "year": 2022, "authors": ["Ana Ruiz"], "abstract": "8-bit inference."}]
box = Toolbox(g, index, emb, StubLiterature(papers), top_k=3)

reply = """I should look at how compression is connected.
```function call
conducting node_relation(entity_name_list=["LLM Compression","DistilledLM"])
Special token: <CALL>
```"""
call = parse_tool_call(reply)
print("parsed:", call)
print(box.dispatch(call).rendered)

# Without the token nothing is executed.
print("uncommitted:", parse_tool_call(reply.replace("<CALL>", "")))
print(box.dispatch(parse_tool_call(
    '```function call\nconducting semantic_search(search_query="quantization")\nSpecial token:<CALL>\n```')).rendered)
