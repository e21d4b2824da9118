import pytest

from src.main import (
    EXIT_NO_COUNTERFACTUALS,
    EXIT_OK,
    EXIT_PIPELINE_ERROR,
    build_parser,
    cmd_list_systems,
    load_config,
    main,
)

SMALL_RUN = [
    "--total-timesteps", "64", "--n-envs", "1", "--n-steps", "64", "--batch-size", "32",
    "--n-epochs", "1", "--hidden-sizes", "8", "8", "--episodes", "3", "--analysis-max-steps", "10",
    "--n-init", "2", "--no-progress",
]


def test_list_systems(capsys):
    text = cmd_list_systems()
    assert text.splitlines() == [
        "system_1_threshold (1-D, [-10,10])",
        "system_2_combined (2-D, [-5,5]^2)",
        "system_3_nonlinear (1-D, [-5,5])",
    ]
    assert capsys.readouterr().out == text
    assert main(["list-systems"]) == EXIT_OK


def test_flags_override_config_file(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("system: system_2_combined\nseed: 3\nn_clusters: 2\n", encoding="utf-8")
    args = build_parser().parse_args([
        "train", "--config", str(path), "--seed", "9", "--out", str(tmp_path / "out"),
        "--external-bounds-low", "-1", "-2",
    ])
    config = load_config(args)
    assert (config.system, config.seed, config.n_clusters) == ("system_2_combined", 9, 2)
    assert config.output_dir == str(tmp_path / "out")
    assert config.external_bounds_low == [-1.0, -2.0]


def test_train_then_analyze(tmp_path):
    out = ["--out", str(tmp_path)]
    assert main(["train", *out, *SMALL_RUN]) == EXIT_OK
    assert (tmp_path / "system_1_threshold_model.json").exists()
    assert main(["analyze", *out, *SMALL_RUN]) in (EXIT_OK, EXIT_NO_COUNTERFACTUALS)
    assert (tmp_path / "system_1_threshold_trajectories.csv").exists()
    assert (tmp_path / "system_1_threshold_rules.txt").exists()


def test_train_reports_actual_timesteps(tmp_path, capsys):
    args = ["train", "--out", str(tmp_path), *SMALL_RUN, "--total-timesteps", "80"]
    assert main(args) == EXIT_OK
    out = capsys.readouterr().out
    assert "Фаз обновления: 2" in out
    assert "Шагов среды: 128 (бюджет 80)" in out


def test_nothing_to_train(tmp_path, capsys):
    assert main(["train", "--out", str(tmp_path), "--total-timesteps", "0", "--no-progress"]) == EXIT_PIPELINE_ERROR
    assert "nothing to train" in capsys.readouterr().err


def test_negative_seed_is_a_config_error(tmp_path, capsys):
    assert main(["train", "--out", str(tmp_path), "--seed", "-1", "--no-progress"]) == EXIT_PIPELINE_ERROR
    assert "non-negative" in capsys.readouterr().err


def test_yaml_float_without_dot(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("learning_rate: 3e-4\nclip_range: 2e-1\n", encoding="utf-8")
    assert main(["train", "--config", str(path), "--out", str(tmp_path), *SMALL_RUN]) == EXIT_OK
    assert load_config(build_parser().parse_args(["train", "--config", str(path)])).learning_rate == 0.0003


def test_analyze_without_checkpoint(tmp_path, capsys):
    assert main(["analyze", "--out", str(tmp_path), "--no-progress"]) == EXIT_PIPELINE_ERROR
    assert "run 'train' first" in capsys.readouterr().err


def test_corrupted_trajectories(tmp_path, capsys):
    (tmp_path / "system_1_threshold_trajectories.csv").write_text(
        "state_0,action_0,next_state_0,prev_output,curr_output,reward\n"
        "4.5,1.0,5.5,Category A,Category B,1.0\n"
        "4.6,oops,5.6,Category A,Category B,1.0\n",
        encoding="utf-8",
    )
    assert main(["report", "--out", str(tmp_path), "--no-progress"]) == EXIT_PIPELINE_ERROR
    assert "line 3" in capsys.readouterr().err


def test_unknown_command():
    with pytest.raises(SystemExit):
        main(["explore"])
