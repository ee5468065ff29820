import pytest

import secvm

SEED = bytes(range(32)).hex()


def test_parse_and_round_trip():
    ds = secvm.parse_dataset("+1 1:2 4:1\n-1 2:3\n")
    assert len(ds) == 2
    assert ds.labels == [1, -1]
    assert ds.features[0] == {1: 2, 4: 1}
    assert secvm.parse_dataset(secvm.serialize_dataset(ds)) == ds


def test_parse_error_names_line():
    with pytest.raises(secvm.ParseError, match="line 2"):
        secvm.parse_dataset("+1 1:1\n-1 x:1\n")
    assert issubclass(secvm.ParseError, secvm.DataError)


def test_missing_file_is_io_error(tmp_path):
    with pytest.raises(secvm.IoError):
        secvm.load_dataset(tmp_path / "missing.txt")


def test_hash_frozen_bins():
    assert secvm.hash_index(0, 1000, SEED) == 263
    assert secvm.hash_index(123456789, 1000, SEED) == 509
    h = secvm.hash_vector({0: 2, 5: -1, 123456789: 4}, 1000, SEED)
    assert h == {263: 2, 59: -1, 509: 4}


def test_update_and_packets():
    g = secvm.local_update([0.0, 0.0], {0: 2, 1: 1}, -1)
    assert g == {0: -2, 1: -1}
    pk = secvm.packetize(g, 1, 1)
    assert len(pk) == 3
    assert secvm.reaggregate(pk) == g


def test_wire_format():
    raw = secvm.encode_package(7, 3, 42, -1)
    assert len(raw) == 13
    assert secvm.decode_package(raw) == (7, 3, 42, -1)
    with pytest.raises(secvm.DecodeError):
        secvm.decode_package(raw[:5])


def test_descriptor_digest_frozen():
    d = {
        "experiment_id": 7, "iteration": 3, "num_bins": 2, "hash_seed": SEED,
        "lambda": 0.1, "train_fraction": 0.7, "class_weight_pos": 4.0, "class_weight_neg": 1.0,
        "deadline": 1320.5, "weights": [0.25, -1.5], "averaged_weights": [0.125, 0.0],
    }
    assert secvm.descriptor_digest(d) == "f5199c324d4a6f264b37293de46628e1d809689bfa85bf39eb6485a5ec2976d5"


def test_simulation_matches_oracle():
    spec = {"num_samples": 120, "num_features": 600, "mean_tokens": 8}
    scenario = {
        "seed": 2, "dataset": {"synthetic": spec, "seed": 9}, "bins": 32,
        "lambda": 0.01, "iterations": 8, "all_train": True,
    }
    sim = secvm.simulate(scenario)
    data = secvm.generate_synthetic(spec, 9)
    oracle = secvm.train_centralized(data, data, lambda_=0.01, iterations=8, bins=32)
    assert sim["final_weights"] == oracle["weights"]
    assert sim["train_clients"] == 120
    assert sim["simulation_csv"].startswith("iteration,")
    assert oracle["trajectory_csv"].startswith("iteration,loss,accuracy")


def test_bad_scenario_field():
    with pytest.raises(secvm.ConfigError, match="lamda"):
        secvm.simulate({"dataset": {"synthetic": {}}, "lamda": 1})


def test_bounds():
    b = secvm.lemma1a_bound(95880008, 95880)
    assert -427.0 <= b["log10"] <= -426.30
    assert b["scientific"] == "4.84e-427"
    r = secvm.lemma2_bound(4, 2, 2)
    assert r["lower_bound"] == pytest.approx(1 / 3)
    o = secvm.collision_oracle(4, 2, "exhaustive")
    assert o["p_min_binmates"][1] == pytest.approx(0.5)
    assert secvm.lemma3_bound(2, 1, 2)["value"] == pytest.approx(0.5)
    assert secvm.plan_bins(95880008, "max_p1", "1e-400")["n"] == 102064
    with pytest.raises(secvm.DomainError):
        secvm.plan_bins(10, "max_p1", "1e-9999")
