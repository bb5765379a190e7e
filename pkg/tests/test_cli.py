import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from omqrewrite import __version__
from omqrewrite.bench import EXAMPLE_TBOX_TEXT
from omqrewrite.cli import main

CHAIN = "q(x0,x7) :- R(x0,x1), S(x1,x2), R(x2,x3), R(x3,x4), S(x4,x5), R(x5,x6), R(x6,x7)\n"
ABOX = "R(a,b)\nS(b,c)\nR(c,d)\nB(d)\nR(d,g)\nR(g,h)\nA(z)\n"


@pytest.fixture
def files(tmp_path: Path) -> dict[str, str]:
    paths = {
        "tbox": EXAMPLE_TBOX_TEXT,
        "query": CHAIN,
        "abox": ABOX,
        "omega": "A sub ex P\nex P- sub ex P\n",
        "single": "q(x) :- A(x)\n",
        "empty": "",
        "bad": "A sub sub B\n",
        "clash": "A disj B\n",
        "clash_abox": "A(a)\nB(a)\n",
    }
    out = {}
    for name, text in paths.items():
        p = tmp_path / f"{name}.txt"
        p.write_text(text)
        out[name] = str(p)
    out["dir"] = str(tmp_path)
    return out


def rows(path: str) -> list[list[str]]:
    return list(csv.reader(Path(path).read_text().splitlines()))


def test_version(capsys):
    with pytest.raises(SystemExit) as err:
        main(["--version"])
    assert err.value.code == 0
    assert capsys.readouterr().out.strip() == f"omqrewrite {__version__} (rng: numpy PCG64)"


def test_rewrite_stats_line(files, capsys, tmp_path):
    out = str(tmp_path / "p.ndl")
    seq1 = "q(x0,x15) :- " + ", ".join(f"{c}(x{i},x{i + 1})" for i, c in enumerate("RRSRSRSRRSRRSSR")) + "\n"
    (tmp_path / "seq.txt").write_text(seq1)
    rc = main(["rewrite", "--method", "slice", "--tbox", files["tbox"], "--query", str(tmp_path / "seq.txt"), "--out", out])
    assert rc == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["clauses"] == 44 and stats["linear"]


def test_tw_single_atom(files, capsys):
    assert main(["rewrite", "--method", "tw", "--tbox", files["tbox"], "--query", files["single"]]) == 0
    text = capsys.readouterr().out
    assert "G(x) :- A(x)." in text.splitlines()
    assert json.loads(text.splitlines()[-1])["clauses"] == 1


def test_infinite_depth_is_a_precondition_error(files, capsys):
    rc = main(["rewrite", "--method", "slice", "--tbox", files["omega"], "--query", files["single"]])
    assert rc == 3
    assert "InfiniteDepth" in capsys.readouterr().err


def test_parse_error_and_missing_file(files, capsys):
    assert main(["rewrite", "--method", "td", "--tbox", files["bad"], "--query", files["query"]]) == 2
    assert "ParseError" in capsys.readouterr().err
    assert main(["oracle", "--tbox", files["tbox"], "--query", files["query"], "--abox", files["dir"] + "/nope"]) == 2


def test_inconsistent_input(files):
    rc = main(["oracle", "--tbox", files["clash"], "--query", files["single"], "--abox", files["clash_abox"]])
    assert rc == 4


@pytest.mark.parametrize("method", ["td", "slice", "tw"])
def test_pipeline_matches_oracle(files, tmp_path, method):
    oracle = str(tmp_path / "oracle.csv")
    assert main(["oracle", "--tbox", files["tbox"], "--query", files["query"], "--abox", files["abox"], "--out", oracle]) == 0
    assert rows(oracle) == [["x0", "x7"], ["a", "h"]]

    prog = str(tmp_path / "arb.ndl")
    assert main(["rewrite", "--method", method, "--tbox", files["tbox"], "--query", files["query"],
                 "--abox-mode", "arbitrary", "--out", prog]) == 0
    raw = str(tmp_path / "raw.csv")
    assert main(["eval", "--program", prog, "--abox", files["abox"], "--out", raw]) == 0
    assert rows(raw) == rows(oracle)

    plain = str(tmp_path / "plain.ndl")
    assert main(["rewrite", "--method", method, "--tbox", files["tbox"], "--query", files["query"], "--out", plain]) == 0
    hc = str(tmp_path / "hc.txt")
    assert main(["hcomplete", "--tbox", files["tbox"], "--abox", files["abox"], "--out", hc]) == 0
    completed = str(tmp_path / "completed.csv")
    assert main(["eval", "--program", plain, "--abox", hc, "--out", completed]) == 0
    assert rows(completed) == rows(oracle)


def test_engines_on_cli(files, tmp_path, capsys):
    prog = str(tmp_path / "slice.ndl")
    main(["rewrite", "--method", "slice", "--tbox", files["tbox"], "--query", files["query"], "--abox-mode", "arbitrary", "--out", prog])
    out = str(tmp_path / "lin.csv")
    assert main(["eval", "--program", prog, "--abox", files["abox"], "--engine", "linear", "--out", out, "--stats"]) == 0
    assert rows(out) == [["x0", "x7"], ["a", "h"]]
    assert "vertices" in capsys.readouterr().out
    one = str(tmp_path / "one.csv")
    assert main(["eval", "--program", prog, "--abox", files["abox"], "--engine", "linear", "--candidate", "a,b", "--out", one]) == 0
    assert rows(one) == [["x0", "x7"]]

    skinny = str(tmp_path / "td.ndl")
    main(["rewrite", "--method", "td", "--tbox", files["tbox"], "--query", files["query"], "--abox-mode", "arbitrary", "--skinny", "--out", skinny])
    circ = str(tmp_path / "circ.csv")
    assert main(["eval", "--program", skinny, "--abox", files["abox"], "--engine", "circuit", "--out", circ]) == 0
    assert rows(circ) == [["x0", "x7"], ["a", "h"]]
    # the td program is not linear
    assert main(["eval", "--program", skinny, "--abox", files["abox"], "--engine", "linear"]) == 3


def test_oracle_on_empty_abox(files, tmp_path):
    out = str(tmp_path / "o.csv")
    assert main(["oracle", "--tbox", files["tbox"], "--query", files["query"], "--abox", files["empty"], "--out", out]) == 0
    assert rows(out) == [["x0", "x7"]]


def test_bench_gen_is_byte_identical(tmp_path, capsys):
    a, b = str(tmp_path / "a.txt"), str(tmp_path / "b.txt")
    for path in (a, b):
        assert main(["bench", "gen", "--V", "60", "--p", "0.1", "--q", "0.1", "--seed", "3", "--out", path]) == 0
    assert Path(a).read_bytes() == Path(b).read_bytes()
    assert Path(a).read_text().startswith("# generator: Erdos-Renyi V=60")
    assert main(["bench", "gen", "--V", "0", "--p", "0.1", "--q", "0.1"]) == 3


def test_bench_table(tmp_path, capsys):
    out = tmp_path / "table.csv"
    assert main(["bench", "table", "--method", "td,slice", "--method", "tw", "--nmax", "3", "--out", str(out)]) == 0
    assert rows(str(out))[0] == ["n", "td", "slice", "tw"]
    assert (tmp_path / "table.png").exists()


def test_module_entry_point(files):
    proc = subprocess.run(
        [sys.executable, "-m", "omqrewrite", "rewrite", "--method", "tw", "--tbox", files["tbox"], "--query", files["single"]],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0 and "G(x) :- A(x)." in proc.stdout
