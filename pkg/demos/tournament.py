"""Swiss tournament between three idea sets with the length-preferring mock judge.

    python demos/tournament.py
"""

import json

from motivkg import HashEmbedder, diversity, elo_update, mock_gateway, swiss_tournament, validate_idea_json
from motivkg import mock


def idea(name: str, method: str):
    fields = {
        "Name": name, "Title": name.replace("_", " "), "Motivation": "Why it matters.",
        "Related Work": "Earlier systems.", "Abstract": "A short abstract.", "Method": method,
        "Experiments plan": "Benchmarks and ablations.", "Risk Factors and Limitations": "Cost.",
    }
    return validate_idea_json("```json\n" + json.dumps(fields) + "\n```")


entries = {
    "grounded": {"t1": idea("graph_walk", "Walk the graph from the challenge node, then draft with cited nodes."),
                 "t2": idea("verifier_loop", "Train a step verifier and rerank sampled chains by weakest step.")},
    "plain": {"t1": idea("just_prompt", "Prompt once."), "t2": idea("bigger_model", "Use a bigger model.")},
    "medium": {"t1": idea("retrieve_more", "Retrieve more passages per step."),
               "t2": idea("vote", "Sample several chains and vote on answers.")},
}

print("one update from equal ratings:", elo_update(1000, 1000, "A", 32))
table = swiss_tournament(entries, ["t1", "t2"], mock_gateway(mock.judge), rng_seed=0)
print(table.leaderboard())
print("byes:", table.byes)
for method, ideas in entries.items():
    print(method, "diversity", round(diversity(list(ideas.values()), HashEmbedder(64)), 3))
