import json

import numpy as np
import pytest

from lgd.lgd_exception import DimensionMismatchError, LgdValueError, LogFormatError
from lgd.lgd_flightlog import FlightLog, LogSet, Segment, generate_campaign, sample_campaign_configuration, segment
from lgd.lgd_paramspec import Configuration, default_configuration, denormalize_array, normalize, normalize_array
from lgd.lgd_predictor import (PARAM_NAMES, FeatureWindow, Normalizer, SurrogateModel, calibrate_threshold, deviation,
                               evaluate_classifier, extract_features, flight_deviations, init_params, load_model,
                               loss_and_grads, paired_deviations, predict, predict_series, save_model,
                               segment_deviations, stable_deviations, stable_pairs, train, window_deviations)
from lgd.lgd_settings import PredictorHyperparams
from lgd.lgd_util import write_json


def sine_flight(flight_id, n, config, phase=0.0):
    """Smooth periodic contexts, every column a shifted sine."""
    t = np.arange(n) * 0.04
    contexts = np.column_stack([np.sin(0.7 * t + phase + k) * (k + 1) for k in range(12)])
    return FlightLog(flight_id=flight_id, config=config, times=t, contexts=contexts)


@pytest.fixture(scope="module")
def logset(table):
    rng = np.random.default_rng(0)
    flights = []
    for i in range(4):
        config = default_configuration(table) if i == 0 else \
            Configuration.from_array(rng.uniform(table.lower, table.upper))
        flights.append(sine_flight(i, 60, config, phase=0.5 * i))
    return LogSet(param_names=list(table.names), flights=flights)


@pytest.fixture(scope="module")
def model(logset, table):
    """An untrained model with a random head so predictions depend on the inputs."""
    rng = np.random.default_rng(9)
    params = init_params(12 + table.dim, 8, rng)
    params["Wy"] = rng.normal(scale=0.5, size=params["Wy"].shape)
    return SurrogateModel(params=params, h=3, normalizer=Normalizer.fit(logset, table), threshold=0.5)


def test_normalizer_ranges(logset, table):
    norm = Normalizer.fit(logset, table)
    scaled = norm.contexts(np.vstack([f.contexts for f in logset]))
    assert scaled.min() == pytest.approx(-1.0)
    assert scaled.max() == pytest.approx(1.0)
    assert np.allclose(norm.configs(table.lower), -1.0)
    assert np.allclose(norm.configs(table.upper), 1.0)
    states = logset.flights[0].contexts[:, :6]
    assert np.allclose(norm.states_inverse(norm.states(states)), states)
    assert norm.dim == 12 + 23
    assert norm.config_dim == 23


def test_normalizer_constant_column(table):
    flight = FlightLog(flight_id=0, config=default_configuration(table), times=np.arange(3.0),
                       contexts=np.ones((3, 12)))
    norm = Normalizer.fit(LogSet(param_names=list(table.names), flights=[flight]), table)
    assert np.array_equal(norm.ctx_half, np.ones(12))
    assert np.array_equal(norm.contexts(np.ones(12)), np.zeros(12))


def test_normalizer_bounds(logset, table):
    norm = Normalizer.fit(logset, table)
    norm.check(np.array([0.5, -1.2]), "fine")
    norm.check(np.array([2.0]), "warns only")
    with pytest.raises(DimensionMismatchError):
        norm.check(np.array([11.0]), "too far")
    with pytest.raises(LgdValueError):
        Normalizer.fit(LogSet(param_names=list(table.names)), table)


def test_normalizer_dict(logset, table):
    norm = Normalizer.fit(logset, table)
    again = Normalizer.from_dict(norm.to_dict())
    assert np.array_equal(again.ctx_center, norm.ctx_center)
    assert np.array_equal(again.cfg_half, norm.cfg_half)


def test_extract_features_shapes(logset, table):
    data = extract_features(logset, table, h=4)
    assert len(data) == 4 * (60 - 4)
    assert data.inputs.shape == (len(data), 4, 12 + 23)
    assert data.targets.shape == (len(data), 6)
    assert data.h == 4
    assert data.skipped == 0
    assert set(data.flight_ids) == {0, 1, 2, 3}


def test_extract_features_alignment(logset, table):
    data = extract_features(logset, table, h=2)
    norm = data.normalizer
    first = logset.flights[0]
    window = data.window(0)
    assert np.allclose(window.rows[:, :12], norm.contexts(first.contexts[0:2]))
    assert np.allclose(window.rows[0, 12:], norm.configs(first.config.array))
    assert np.allclose(window.target, norm.states(first.contexts[2, :6]))


def test_predict_accepts_feature_windows(model, logset, table):
    data = extract_features(logset, table, h=model.h, normalizer=model.normalizer)
    for i in (0, 5, len(data) - 1):
        window = data.window(i)
        assert isinstance(window, FeatureWindow)
        assert np.array_equal(predict(model, window), predict(model, data.inputs[i]))
    assert predict(model, data.window(0)).shape == (6,)


def test_extract_features_skips_short_flights(logset, table):
    flights = list(logset.flights) + [sine_flight(9, 3, default_configuration(table))]
    data = extract_features(LogSet(param_names=logset.param_names, flights=flights), table, h=4,
                            normalizer=Normalizer.fit(logset, table))
    assert data.skipped == 1
    assert 9 not in set(data.flight_ids)


def test_extract_features_subsample(logset, table):
    a = extract_features(logset, table, h=2, max_windows=50, seed=3)
    b = extract_features(logset, table, h=2, max_windows=50, seed=3)
    assert len(a) == 50
    assert np.array_equal(a.inputs, b.inputs)


def test_extract_features_arguments(logset, table):
    with pytest.raises(LgdValueError):
        extract_features(logset, table, h=0)
    with pytest.raises(LgdValueError):
        extract_features(LogSet(param_names=logset.param_names), table, h=2)


def test_untrained_model_predicts_mean():
    rng = np.random.default_rng(1)
    mean = np.arange(6.0) / 10.0
    params = init_params(5, 4, rng, target_mean=mean)
    model = SurrogateModel(params=params, h=2, normalizer=None)
    out = predict(model, rng.normal(size=(3, 2, 5)))
    assert np.allclose(out, mean)
    assert params["b"][4:8].tolist() == [1.0] * 4


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(42)
    params = init_params(5, 4, rng)
    params["Wy"] = rng.normal(size=params["Wy"].shape)
    params["by"] = rng.normal(size=6)
    inputs = rng.normal(size=(3, 3, 5))
    targets = rng.normal(size=(3, 6))
    _, grads = loss_and_grads(params, inputs, targets)

    eps = 1e-6
    for name in PARAM_NAMES:
        flat = params[name].reshape(-1)
        for k in rng.choice(flat.size, size=min(5, flat.size), replace=False):
            saved = flat[k]
            flat[k] = saved + eps
            up, _ = loss_and_grads(params, inputs, targets)
            flat[k] = saved - eps
            down, _ = loss_and_grads(params, inputs, targets)
            flat[k] = saved
            numeric = (up - down) / (2 * eps)
            assert grads[name].reshape(-1)[k] == pytest.approx(numeric, rel=1e-4, abs=1e-8), name


def test_train_improves_and_is_seeded(logset, table):
    hp = PredictorHyperparams(h=2, hidden_size=8, epochs=3, batch_size=32, patience=3)
    data = extract_features(logset, table, h=2)
    a = train(data, hp, seed=5)
    b = train(data, hp, seed=5)
    assert a.metadata["final_val_loss"] <= a.metadata["start_val_loss"]
    assert a.metadata["n_windows"] == len(data)
    assert 1 <= a.metadata["epochs_run"] <= 3
    assert len(a.metadata["loss_curve"]) == a.metadata["epochs_run"]
    for name in PARAM_NAMES:
        assert np.array_equal(a.params[name], b.params[name])
    assert a.hidden_size == 8
    assert a.input_size == 12 + 23


def test_train_argument_checks(logset, table):
    data = extract_features(logset, table, h=2, max_windows=50)
    with pytest.raises(LgdValueError):
        train(data, PredictorHyperparams(h=2), seed=0)
    data = extract_features(logset, table, h=2)
    with pytest.raises(DimensionMismatchError):
        train(data, PredictorHyperparams(h=3), seed=0)


def linear_flight(flight_id, config, table, rng, n=60):
    """Every context column decays by 0.9 per entry towards a bias set by the configuration."""
    unit = normalize(config, table)
    bias = 0.02 * (2.0 * unit[np.arange(12) % table.dim] - 1.0)
    contexts = np.empty((n, 12))
    contexts[0] = rng.uniform(-1.0, 1.0, size=12)
    for t in range(n - 1):
        contexts[t + 1] = 0.9 * contexts[t] + bias
    return FlightLog(flight_id=flight_id, config=config, times=np.arange(n) * 0.04, contexts=contexts)


@pytest.mark.slow
def test_learns_linear_dynamics_with_config_bias(table):
    rng = np.random.default_rng(21)
    flights = [linear_flight(i, Configuration.from_array(rng.uniform(table.lower, table.upper)), table, rng)
               for i in range(48)]
    hp = PredictorHyperparams()
    data = extract_features(LogSet(param_names=list(table.names), flights=flights[:40]), table, h=hp.h)
    trained = train(data, hp, seed=0)
    held_out = extract_features(LogSet(param_names=list(table.names), flights=flights[40:]), table, h=hp.h,
                                normalizer=data.normalizer)
    assert np.mean((predict(trained, held_out.inputs) - held_out.targets) ** 2) < 1e-3


BAD_SETTINGS = {"ATC_RAT_RLL_P": 0.01, "ATC_RAT_PIT_P": 0.01, "ATC_ANG_RLL_P": 0.2, "ATC_ANG_PIT_P": 0.2,
                "ATC_RAT_RLL_D": 0.05, "ATC_RAT_PIT_D": 0.05, "PSC_VELXY_P": 6.0, "WPNAV_SPEED": 2000.0,
                "INS_POS1_Z": 5.0, "INS_POS2_Z": -5.0}


@pytest.mark.slow
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_destabilizing_configs_deviate_more(table, mission, seed):
    logset = generate_campaign(table, 100, mission, seed, jobs=4)
    hp = PredictorHyperparams()
    trained = train(extract_features(logset, table, h=hp.h, max_windows=hp.max_windows, seed=seed), hp, seed=seed)

    rng = np.random.default_rng(seed)
    defaults = default_configuration(table)
    names = sorted(BAD_SETTINGS)
    unstable = []
    for _ in range(30):
        picked = [str(n) for n in rng.choice(names, 3, replace=False)]
        unstable.append(defaults.with_values(table, **{n: BAD_SETTINGS[n] for n in picked}))
    stable = [sample_campaign_configuration(table, rng) for _ in range(30)]
    segments = segment(logset, hp.h)
    picks = rng.choice(len(segments), size=min(50, len(segments)), replace=False)

    def mean_deviation(configs):
        unit = normalize_array(np.stack([c.array for c in configs]), table)
        return np.mean([segment_deviations(trained, segments[k], unit, table) for k in picks])

    assert mean_deviation(unstable) > mean_deviation(stable)


def test_deviation_is_l1_of_prediction(model, logset):
    seg = segment(logset, h=3)[0]
    config = logset.flight(seg.flight_id).config
    norm = model.normalizer
    rows = np.hstack([norm.contexts(seg.contexts[:3]), np.tile(norm.configs(config.array), (3, 1))])
    expected = np.abs(predict(model, rows) - norm.states(seg.contexts[3, :6])).sum()
    assert deviation(model, seg, config) == pytest.approx(expected)
    assert deviation(model, seg, config) >= 0.0


def test_deviation_shape_checks(model, logset, table):
    short = segment(logset, h=2)[0]
    with pytest.raises(DimensionMismatchError):
        deviation(model, short, default_configuration(table))
    seg = segment(logset, h=3)[0]
    with pytest.raises(DimensionMismatchError):
        window_deviations(model, seg.contexts[None], np.zeros((1, 5)))
    with pytest.raises(DimensionMismatchError):
        predict(model, np.zeros((2, 4)))


def test_segment_deviations_use_unit_box(model, logset, table):
    seg = segment(logset, h=3)[1]
    unit = np.random.default_rng(2).uniform(size=(4, table.dim))
    devs = segment_deviations(model, seg, unit, table)
    expected = [deviation(model, seg, Configuration.from_array(v)) for v in denormalize_array(unit, table)]
    assert devs == pytest.approx(expected)


def test_threshold_is_max_stable_deviation(model, logset):
    segments = segment(logset, h=3)
    pairs = stable_pairs(logset, segments)
    assert len(pairs) == len(segments)
    devs = paired_deviations(model, pairs)
    assert calibrate_threshold(model, pairs) == devs.max()
    with pytest.raises(LgdValueError):
        calibrate_threshold(model, [])
    assert paired_deviations(model, []).size == 0


def test_flight_deviations_cover_every_window(model, logset):
    flight = logset.flight(1)
    devs = flight_deviations(model, flight)
    assert len(devs) == len(flight) - model.h
    for start in (0, 1, 17, len(flight) - model.h - 1):
        seg = Segment(contexts=flight.contexts[start:start + model.h + 1], flight_id=1, start=start)
        assert devs[start] == pytest.approx(deviation(model, seg, flight.config))
    assert flight_deviations(model, sine_flight(7, model.h, flight.config)).size == 0


@pytest.mark.parametrize("seed", [2, 7, 11])
def test_threshold_dominates_every_stride_one_window(logset, table, seed):
    rng = np.random.default_rng(seed)
    flights = [FlightLog(flight_id=f.flight_id, config=f.config, times=f.times,
                         contexts=f.contexts + rng.normal(scale=0.05, size=f.contexts.shape))
               for f in logset.flights]
    noisy = LogSet(param_names=logset.param_names, flights=flights)
    hp = PredictorHyperparams(h=4, hidden_size=8, epochs=2, batch_size=32, patience=2)
    trained = train(extract_features(noisy, table, h=4), hp, seed=seed)
    threshold = calibrate_threshold(trained, noisy)

    every = [window_deviations(trained, np.stack([f.contexts[s:s + 5] for s in range(len(f) - 4)]),
                               np.tile(f.config.array, (len(f) - 4, 1))) for f in noisy.flights]
    assert threshold == pytest.approx(max(float(d.max()) for d in every))
    assert stable_deviations(trained, noisy).size == sum(len(f) - 4 for f in noisy.flights)
    assert threshold >= calibrate_threshold(trained, stable_pairs(noisy, segment(noisy, h=4)))


def test_evaluate_classifier(model, logset, table):
    segments = segment(logset, h=3)
    cfg = default_configuration(table)
    labeled = [(cfg, True), (cfg, True), (cfg, False), (cfg, False)]

    everything = evaluate_classifier(model.with_threshold(-1.0), segments, labeled, seed=0)
    assert (everything.recall, everything.precision, everything.accuracy) == (1.0, 0.5, 0.5)
    assert everything.n == 4

    nothing = evaluate_classifier(model.with_threshold(1e9), segments, labeled, seed=0)
    assert (nothing.recall, nothing.precision, nothing.accuracy) == (0.0, 0.0, 0.5)
    assert nothing.dc >= 0.0 and nothing.di >= 0.0

    assert evaluate_classifier(model, segments, [], seed=0).n == 0
    with pytest.raises(LgdValueError):
        evaluate_classifier(model, [], labeled, seed=0)


def test_predict_series(model, logset):
    flight = logset.flight(1)
    frame = predict_series(model, flight)
    assert len(frame) == len(flight) - 3
    assert frame.columns[0] == "t"
    assert frame["t"].iloc[0] == flight.times[3]
    assert np.allclose(frame["truth_roll"], flight.contexts[3:, 0])
    assert (frame["error"] >= 0).all()

    short = sine_flight(7, 2, flight.config)
    assert predict_series(model, short).empty


def test_with_threshold_copies(model):
    other = model.with_threshold(2.0)
    assert other.threshold == 2.0
    assert model.threshold == 0.5
    assert other.params is model.params


def test_model_file_exact(model, tmp_path):
    path = tmp_path / "model.lgd"
    save_model(model, path)
    again = load_model(path)
    assert again.h == model.h
    assert again.threshold == model.threshold
    for name in PARAM_NAMES:
        assert np.array_equal(again.params[name], model.params[name])
    assert np.array_equal(again.normalizer.ctx_center, model.normalizer.ctx_center)


def test_model_file_errors(model, tmp_path):
    with pytest.raises(LogFormatError):
        load_model(tmp_path / "missing.json")

    corrupt = tmp_path / "corrupt.json"
    corrupt.write_text("{not json")
    with pytest.raises(LogFormatError):
        load_model(corrupt)

    path = tmp_path / "model.lgd"
    save_model(model, path)
    data = path.read_text()

    wrong_version = tmp_path / "v2.json"
    wrong_version.write_text(data.replace('"format_version": 1', '"format_version": 2'))
    with pytest.raises(LogFormatError):
        load_model(wrong_version)

    doc = json.loads(data)
    doc["hidden_size"] = 5
    mismatch = tmp_path / "mismatch.json"
    write_json(mismatch, doc)
    with pytest.raises(DimensionMismatchError):
        load_model(mismatch)
