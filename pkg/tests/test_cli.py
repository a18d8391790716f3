import json

import pytest

from helpers import FIXTURES, fixture_config
from motivkg.cli import (
    EXIT_EXTRACTION,
    EXIT_OK,
    EXIT_PROVIDER,
    EXIT_USAGE,
    EXIT_VALIDATION,
    cmd_build_graph,
    cmd_evaluate,
    cmd_hierarchy,
    cmd_ideate,
    main,
)
from motivkg.config import ConfigError, RunConfig, build_llm
from motivkg.llm import FAIL, mock_gateway

CORPUS = str(FIXTURES / "corpus")


def write_config(tmp_path, **overrides) -> str:
    data = json.loads((FIXTURES / "run.json").read_text())
    data.update({"output_dir": str(tmp_path / "runs"), "topics_file": str(FIXTURES / "topics.txt"),
                 "literature": {"type": "stub", "records": str(FIXTURES / "literature.json")}})
    data.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    return str(path)


def test_full_cli_flow(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["build-graph", CORPUS, "--config", cfg]) == EXIT_OK
    built = json.loads(capsys.readouterr().out)
    assert built["papers"] == 5 and built["failures"] == []
    assert main(["hierarchy", "problem", "--config", cfg]) == EXIT_OK
    assert main(["hierarchy", "challenge", "--config", cfg]) == EXIT_OK
    assert main(["validate-graph", "--config", cfg]) == EXIT_OK
    assert main(["ideate", "--config", cfg]) == EXIT_OK
    capsys.readouterr()
    assert main(["evaluate", "--config", cfg, f"baseline={FIXTURES / 'baseline_ideas'}"]) == EXIT_OK
    result = json.loads(capsys.readouterr().out)
    assert set(result["methods"]) == {"baseline", "motivkg"}
    run = tmp_path / "runs" / "smoke"
    assert (run / "leaderboard.txt").read_text().startswith("Method")
    for rel in ("config.json", "graph/nodes.jsonl", "graph/edges.jsonl", "graph/embeddings.jsonl",
                "reports/ingestion.json", "reports/hierarchy-problem.json", "evaluation.json"):
        assert (run / rel).exists(), rel


def test_single_method_skips_tournament(tmp_path):
    cfg = fixture_config(tmp_path)
    cmd_build_graph(cfg, CORPUS)
    cmd_ideate(cfg, ["long document reasoning"])
    out = cmd_evaluate(cfg)
    assert out["tournament"] is None and "only one method" in out["notice"]
    assert (cfg.run_dir / "leaderboard.txt").read_text().startswith("Tournament skipped")


def test_dry_run_calls_nothing(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["build-graph", CORPUS, "--config", cfg, "--dry-run"]) == EXIT_OK
    plan = json.loads(capsys.readouterr().out)
    assert plan["dry_run"] and len(plan["papers"]) == 5
    assert not (tmp_path / "runs" / "smoke" / "graph").exists()


def test_usage_errors(tmp_path, capsys):
    assert main(["hierarchy", "solution"]) == EXIT_USAGE
    assert main(["frobnicate"]) == EXIT_USAGE
    assert main(["validate-graph", "--config", str(tmp_path / "missing.json")]) == EXIT_USAGE
    assert main(["validate-graph", "--config", write_config(tmp_path)]) == EXIT_USAGE  # no graph yet
    assert main(["build-graph", CORPUS, "--config", write_config(tmp_path, hierarchy_k=0)]) == EXIT_USAGE
    assert main(["build-graph", CORPUS, "--config", write_config(tmp_path, mystery=1)]) == EXIT_USAGE


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"seed": "random"})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"topics_file": "nope.txt"}, base_dir=tmp_path)
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"providers": {"oracle": {}}})
    with pytest.raises(ConfigError):
        build_llm(RunConfig.from_dict({"providers": {"judge": {"type": "psychic"}}}), "judge")


def test_extraction_failure_exit_code(tmp_path):
    replies = tmp_path / "junk.json"
    replies.write_text(json.dumps(["no json"] * 3))
    cfg = write_config(tmp_path, providers={"extractor": {"type": "script", "replies": str(replies)}})
    assert main(["build-graph", str(FIXTURES / "bad_corpus.txt"), "--config", cfg]) == EXIT_EXTRACTION
    report = json.loads((tmp_path / "runs" / "smoke" / "reports" / "ingestion.json").read_text())
    assert report["failures"][0]["paper"] == "bad_corpus"


def test_paper_without_triples_is_not_an_error(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["build-graph", str(FIXTURES / "bad_corpus.txt"), "--config", cfg]) == EXIT_OK


def test_provider_failure_exit_code(tmp_path):
    cfg = write_config(tmp_path, providers={"merger": {"type": "callable", "target": "test_cli:always_fail", "retries": 0}})
    assert main(["build-graph", CORPUS, "--config", cfg]) == EXIT_OK
    assert main(["hierarchy", "problem", "--config", cfg]) == EXIT_PROVIDER


def always_fail(request):
    raise FAIL


def test_validation_failure_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path)
    main(["build-graph", CORPUS, "--config", cfg])
    edges = tmp_path / "runs" / "smoke" / "graph" / "edges.jsonl"
    edges.write_text(edges.read_text() + json.dumps({"kind": "ParentOf", "src": "n000001", "dst": "n000002"}) + "\n")
    capsys.readouterr()
    assert main(["validate-graph", "--config", cfg]) == EXIT_VALIDATION
    assert "schema" in capsys.readouterr().out


def test_script_provider_from_file(tmp_path):
    replies = tmp_path / "replies.json"
    replies.write_text(json.dumps(["```json\n{\"merge\": false}\n```"] * 50))
    cfg = fixture_config(tmp_path, providers={"merger": {"type": "script", "replies": str(replies)}})
    cmd_build_graph(cfg, CORPUS)
    summary = cmd_hierarchy(cfg, "challenge")
    assert summary["parent_nodes"] == 0


def test_injected_providers_override_config(tmp_path):
    cfg = fixture_config(tmp_path)
    cmd_build_graph(cfg, CORPUS)
    gw = mock_gateway(['```json\n{"merge": false}\n```'] * 50)
    cmd_hierarchy(cfg, "problem", llm=gw)
    assert gw.provider.calls > 0


def test_rejected_sessions_are_discarded(tmp_path):
    cfg = fixture_config(tmp_path, ideas_per_topic=1)
    cmd_build_graph(cfg, CORPUS)
    out = cmd_ideate(cfg, ["please reject this topic", "long document reasoning"])
    assert [s["accepted"] for s in out["per_session"]] == [False, True]
    ideas = sorted(p.name for p in (cfg.run_dir / "ideas" / "motivkg").iterdir())
    assert ideas == ["long-document-reasoning__1.json"]
    assert (cfg.run_dir / "transcripts" / "motivkg" / "please-reject-this-topic__1.json").exists()


def test_workers_do_not_change_outputs(tmp_path):
    outs = []
    for workers in (1, 4):
        cfg = fixture_config(tmp_path / f"w{workers}", workers=workers)
        cmd_build_graph(cfg, CORPUS)
        cmd_ideate(cfg)
        outs.append({p.relative_to(cfg.run_dir).as_posix(): p.read_bytes()
                     for p in sorted(cfg.run_dir.rglob("*")) if p.is_file() and "logs" not in p.parts
                     and p.name != "config.json"})
    assert outs[0] == outs[1]
