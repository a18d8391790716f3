"""Motivational knowledge graph ideation: graph building, hierarchy, tool-using ideation and evaluation."""

from .embed import HashEmbedder, VectorIndex, cosine
from .evaluator import diversity, direct_score, elo_update, judge_pair, swiss_tournament
from .graph import EdgeKind, MotivGraph, NodeKind
from .hierarchy import run_parent_pass, run_until_stable
from .ideator import IdeaDocument, deliberate, explore, validate_idea_json
from .llm import ChatMessage, ChatRequest, Gateway, ProviderProfile, mock_gateway
from .miner import extract_triples, ingest_paper, ingest_triples
from .tools import Toolbox, parse_tool_call

__all__ = [
    "ChatMessage", "ChatRequest", "EdgeKind", "Gateway", "HashEmbedder", "IdeaDocument", "MotivGraph",
    "NodeKind", "ProviderProfile", "Toolbox", "VectorIndex", "cosine", "deliberate", "direct_score",
    "diversity", "elo_update", "explore", "extract_triples", "ingest_paper", "ingest_triples", "judge_pair",
    "mock_gateway", "parse_tool_call", "run_parent_pass", "run_until_stable", "swiss_tournament",
    "validate_idea_json",
]
__version__ = "0.1.0"
