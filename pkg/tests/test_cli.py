import json

from certreg.cli import main
from certreg.overlap import cover_instance_from_predictions, write_instance
from certreg.partition import SHARED_BLOCKS_EXAMPLE, BlockMapping


def test_oracle_commands(capsys):
    assert main(["oracle", "swap", "--votes", "2,3,4,5,6", "--xi", "5.4"]) == 0
    assert json.loads(capsys.readouterr().out)["R"] == 1
    assert main(["oracle", "weighted-swap", "--votes", "2,3,4,5,6", "--xi", "5.4",
                 "--costs", "1,1,1,2,2"]) == 0
    assert json.loads(capsys.readouterr().out)["R"] == 1
    assert main(["oracle", "insert-delete", "--votes", "2 3 4 5 6", "--xi", "5.4"]) == 0
    assert json.loads(capsys.readouterr().out)["R"] == 2


def test_solve_psmc(tmp_path, capsys):
    inst = cover_instance_from_predictions([2, 3, 4, 5, 6], 5.5,
                                           BlockMapping.from_lists(7, SHARED_BLOCKS_EXAMPLE))
    path = tmp_path / "shared.txt"
    write_instance(inst, path)
    assert main(["solve-psmc", str(path), "--greedy"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["certified_R"] == 1 and out["exact"]
    assert main(["oracle", "overlap", "--instance", str(path)]) == 0
    assert json.loads(capsys.readouterr().out)["R"] == 1


def test_run_and_cert(tmp_path, capsys):
    data = tmp_path / "d.csv"
    data.write_text("x,y\n" + "".join(f"{i},{2 * i + 1}\n" for i in range(60)))
    cfg = {"dataset": str(data), "target": "y", "method": "pcr", "q": 3, "trials": 2,
           "test_samples": 5, "threshold_mode": "absolute", "threshold_value": 50.0}
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    out = tmp_path / "curve.csv"
    assert main(["run", "--config", str(tmp_path / "c.json"), "--out", str(out)]) == 0
    assert out.read_text().startswith("R,mean,stdev\n")
    assert main(["cert", "--data", str(data), "--target", "y", "--method", "pcr", "--q", "3",
                 "--xi", "50", "--trials", "2", "--samples", "5", "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["rows"][0]["R"] == 0


def test_errors_are_reported(tmp_path, capsys):
    assert main(["solve-psmc", str(tmp_path / "missing.txt")]) == 2
    assert "error" in capsys.readouterr().err
