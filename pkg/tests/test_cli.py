import json

import pytest

from roadweave.cli import main
from roadweave.field import read_field, rasterize_truth, write_field
from roadweave.graph import read_graph_json, write_graph_json

from geofixtures import barbell, field_grid_for, lattice, remove_edges


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    full = lattice(4, 60.0)
    base, _ = remove_edges(full, 0.25, seed=3)
    write_graph_json(full, d / "full.json")
    write_graph_json(base, d / "base.json")
    grid = field_grid_for(full)
    write_field(rasterize_truth(full, grid, 12.0, 20.0), d / "field.dfl")
    bar, _ = barbell()
    write_graph_json(bar, d / "barbell.json")
    return d


def test_gen_field_writes_readable_file(files, capsys):
    out = files / "gen.dfl"
    rc = main([
        "gen-field", "--graph", str(files / "full.json"), "--out", str(out),
        "--cell-size", "2", "--step-dist", "12", "--match-thresh", "20",
    ])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["nonzero_cells"] > 0
    field = read_field(out)
    assert field.grid.buckets == 64


def test_infer_from_peaks(files, capsys, tmp_path):
    out = tmp_path / "inferred.json"
    rc = main([
        "infer", "--field", str(files / "field.dfl"), "--out", str(out),
        "--threshold", "0.5",
    ])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["inferred_edges"] > 0
    assert read_graph_json(out).n_edges == report["inferred_edges"]


def test_infer_extending_base(files, capsys, tmp_path):
    out = tmp_path / "inferred.json"
    merged_out = tmp_path / "merged.json"
    rc = main([
        "infer", "--field", str(files / "field.dfl"), "--base", str(files / "base.json"),
        "--out", str(out), "--merged-out", str(merged_out), "--threshold", "0.5",
    ])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    inferred = read_graph_json(out)
    merged = read_graph_json(merged_out)
    assert inferred.n_edges == report["inferred_edges"] > 0
    assert set(inferred.edges) <= set(merged.edges)


def test_prune_flags(files, capsys, tmp_path):
    out = tmp_path / "major.json"
    rc = main([
        "prune", "--graph", str(files / "barbell.json"), "--out", str(out),
        "--r", "1000", "--min-cell", "10", "--R", "5000", "--trim", "500",
    ])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["centers"] == 2
    assert report["retained_edges"] == 33
    assert read_graph_json(out).n_edges == 33


def test_rank_lists_components(files, capsys, tmp_path):
    inferred = tmp_path / "inf.json"
    main([
        "infer", "--field", str(files / "field.dfl"), "--base", str(files / "base.json"),
        "--out", str(inferred), "--threshold", "0.5",
    ])
    capsys.readouterr()
    rc = main([
        "rank", "--inferred", str(inferred), "--base", str(files / "base.json"),
    ])
    assert rc == 0
    lines = [json.loads(l) for l in capsys.readouterr().out.strip().splitlines()]
    assert lines
    scores = [l["score"] for l in lines]
    assert scores == sorted(scores, reverse=True)


def test_eval_topo_single_line_record(files, capsys, tmp_path):
    per_origin = tmp_path / "origins.csv"
    rc = main([
        "eval-topo", "--inferred", str(files / "full.json"), "--truth", str(files / "full.json"),
        "--max-origins", "20", "--per-origin", str(per_origin),
    ])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["precision"] == 1.0
    assert report["recall"] == 1.0
    table = per_origin.read_text().strip().splitlines()
    assert table[0] == "x,y,matched,precision,recall"
    assert len(table) == report["origins"] + 1


def test_eval_rge_single_line_record(files, capsys):
    rc = main([
        "eval-rge", "--added", str(files / "base.json"), "--truth", str(files / "full.json"),
    ])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["rge"] == pytest.approx(0.0, abs=1e-9)
    assert report["max_rge"] == pytest.approx(0.0, abs=1e-9)
