import io
import math

import numpy as np
import pytest

from data.log_parsers.DETECTION.log_parsers_detection import read_detection_log, write_detection_log
from services.distill.key_buffer import KeyBuffer
from services.errors import MalformedLogError, ProtocolError
from services.linkmodel.link_model import (
    ChannelConfig, LinkBudget, ReceiverConfig, SourceConfig, analytic_qber, build_link_budget,
)
from services.protocol.block_simulator import DetectionLog, simulate_block
from services.protocol.phase_coding import PHASE_STATES, PhaseSymbol, encode_phase
from services.protocol.randomness import StreamPurpose, derive_generator, derive_seed
from services.protocol.sifting import measured_qber, sift


@pytest.mark.parametrize("basis, bit, phase", [(0, 0, 0.0), (0, 1, math.pi), (1, 0, math.pi / 2), (1, 1, 3 * math.pi / 2)])
def test_encode_phase(basis, bit, phase):
    assert encode_phase(PhaseSymbol(basis, bit)) == pytest.approx(phase)


def test_phase_symbol_index_and_validation():
    assert [s.index for s in PHASE_STATES] == [0, 1, 2, 3]
    assert PhaseSymbol.from_index(3) == PhaseSymbol(1, 1)
    with pytest.raises(ProtocolError):
        PhaseSymbol(2, 0)


def test_derived_streams_are_reproducible_and_independent():
    a = derive_generator(7, StreamPurpose.CYCLES, 0, 0).integers(0, 2**32, size=8)
    b = derive_generator(7, StreamPurpose.CYCLES, 0, 0).integers(0, 2**32, size=8)
    c = derive_generator(7, StreamPurpose.CYCLES, 1, 0).integers(0, 2**32, size=8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert derive_seed(7, StreamPurpose.BLOCK, 3) == derive_seed(7, StreamPurpose.BLOCK, 3)
    assert derive_seed(7, StreamPurpose.BLOCK, 3) != derive_seed(7, StreamPurpose.BLOCK, 4)


def test_simulate_block_without_light_or_dark_counts_is_empty():
    budget = LinkBudget(0.0, 1.0, 0.0, 0.0, 0.96)
    assert len(simulate_block(budget, 10_000, seed=1)) == 0


def test_simulate_block_with_certain_dark_counts_clicks_every_cycle():
    budget = LinkBudget(0.0, 1.0, 0.0, 1.0, 0.96)
    log = simulate_block(budget, 5_000, seed=1)
    assert len(log) == 5_000
    assert np.array_equal(log.cycle_index, np.arange(5_000))


def test_simulate_block_rejects_zero_cycles():
    with pytest.raises(ProtocolError):
        simulate_block(LinkBudget(0.0, 1.0, 0.0, 0.0, 1.0), 0, seed=1)


def test_simulate_block_long_line_click_count():
    budget = build_link_budget(SourceConfig(), ChannelConfig(), ReceiverConfig())
    n = 100_000_000
    p = budget.average_click_probability
    log = simulate_block(budget, n, seed=2024)
    assert n * p == pytest.approx(510.5, rel=0.01)
    assert abs(len(log) - n * p) <= 4 * math.sqrt(n * p)


def test_simulate_block_long_line_qber_within_binomial_error():
    budget = build_link_budget(SourceConfig(), ChannelConfig(), ReceiverConfig())
    result = sift(simulate_block(budget, 100_000_000, seed=99))
    q = analytic_qber(budget)
    se = math.sqrt(q * (1 - q) / len(result.alice_key))
    assert abs(measured_qber(result.alice_key, result.bob_key) - q) <= 4 * se


def test_simulate_block_is_seed_deterministic_and_worker_independent():
    budget = LinkBudget(0.2, 1.0, 0.05, 1e-3, 0.9)
    one = simulate_block(budget, 50_000, seed=5, chunk_cycles=4_096)
    again = simulate_block(budget, 50_000, seed=5, chunk_cycles=4_096)
    parallel = simulate_block(budget, 50_000, seed=5, workers=4, chunk_cycles=4_096)
    other = simulate_block(budget, 50_000, seed=6, chunk_cycles=4_096)
    for log in (again, parallel):
        assert np.array_equal(one.cycle_index, log.cycle_index)
        assert np.array_equal(one.alice_states, log.alice_states)
        assert np.array_equal(one.bob_states, log.bob_states)
    assert not np.array_equal(one.cycle_index, other.cycle_index)


def _grid_budgets():
    rng = np.random.default_rng(20)
    for _ in range(20):
        mu = rng.uniform(2e-3, 2e-2)
        yield LinkBudget(mu, 1.0, mu, rng.uniform(0, 2e-4), rng.uniform(0.8, 1.0))


@pytest.mark.slow
@pytest.mark.parametrize("budget", list(_grid_budgets()))
def test_monte_carlo_agrees_with_closed_forms(budget):
    n = 10_000_000
    result = sift(simulate_block(budget, n, seed=17))
    p_sift = budget.sift_probability
    assert abs(len(result.alice_key) - n * p_sift) <= 4 * math.sqrt(n * p_sift * (1 - p_sift))
    q = analytic_qber(budget)
    se = math.sqrt(q * (1 - q) / len(result.alice_key))
    assert abs(measured_qber(result.alice_key, result.bob_key) - q) <= 4 * se + 1e-12


def test_perfect_link_sifts_identical_keys():
    budget = LinkBudget(0.5, 1.0, 0.05, 0.0, 1.0)
    for seed in range(5):
        result = sift(simulate_block(budget, 100_000, seed=seed))
        assert len(result.alice_key) > 0
        assert measured_qber(result.alice_key, result.bob_key) == 0.0


def _toy_log():
    s = PhaseSymbol
    clicks = [
        (0, s(0, 0), s(0, 0)),
        (3, s(1, 1), s(0, 1)),
        (4, s(1, 0), s(1, 0)),
        (7, s(0, 1), s(0, 0)),
        (9, s(0, 0), s(1, 1)),
        (12, s(1, 1), s(1, 1)),
    ]
    return DetectionLog.from_clicks(20, clicks)


def test_sift_toy_log():
    result = sift(_toy_log())
    assert list(result.kept_indices) == [0, 4, 7, 12]
    assert result.alice_key == KeyBuffer.from_string('0011', result.alice_key.stage)
    assert result.bob_key == KeyBuffer.from_string('0001', result.bob_key.stage)
    assert measured_qber(result.alice_key, result.bob_key) == 0.25


def test_sift_empty_and_mismatched():
    empty = sift(DetectionLog.empty(10))
    assert len(empty.alice_key) == len(empty.bob_key) == 0
    one = sift(DetectionLog.from_clicks(10, [(2, PhaseSymbol(0, 1), PhaseSymbol(1, 1))]))
    assert len(one.alice_key) == 0


def test_measured_qber_examples():
    assert measured_qber(KeyBuffer.from_bits(np.ones(64, dtype=np.uint8)), KeyBuffer.from_bits(np.ones(64, dtype=np.uint8))) == 0.0
    assert measured_qber(KeyBuffer.from_string('10110010'), KeyBuffer.from_string('10110011')) == 0.125
    with pytest.raises(ProtocolError):
        measured_qber(KeyBuffer.from_string('1'), KeyBuffer.from_string('10'))
    with pytest.raises(ProtocolError):
        measured_qber(KeyBuffer.empty(), KeyBuffer.empty())


def test_detection_log_rejects_unordered_cycles():
    with pytest.raises(ProtocolError):
        DetectionLog(10, np.array([3, 2]), np.zeros(2, dtype=np.uint8), np.zeros(2, dtype=np.uint8))
    with pytest.raises(ProtocolError):
        DetectionLog(10, np.array([3, 10]), np.zeros(2, dtype=np.uint8), np.zeros(2, dtype=np.uint8))


def test_thinning_keeps_expected_fraction():
    budget = LinkBudget(0.0, 1.0, 0.0, 1.0, 1.0)
    log = simulate_block(budget, 20_000, seed=4)
    thinned = log.thinned(0.25, derive_generator(4, StreamPurpose.THINNING, 0))
    assert abs(len(thinned) - 5_000) <= 4 * math.sqrt(20_000 * 0.25 * 0.75)
    assert np.all(np.isin(thinned.cycle_index, log.cycle_index))
    assert log.thinned(1.0, derive_generator(4, StreamPurpose.THINNING, 0)) is log


def test_detection_log_file_round_trip():
    log = _toy_log()
    buffer = io.StringIO()
    write_detection_log(buffer, log, metadata={'seed': 5})
    parsed, metadata = read_detection_log(io.StringIO(buffer.getvalue()))
    assert metadata == {'seed': '5'}
    assert parsed.n_cycles == 20
    assert parsed.clicks == log.clicks


def _write(log):
    buffer = io.StringIO()
    write_detection_log(buffer, log)
    return buffer.getvalue().splitlines(keepends=True)


def test_truncated_log_is_malformed():
    lines = _write(_toy_log())
    cut = ''.join(lines[:-2]) + lines[-2][:3]
    with pytest.raises(MalformedLogError) as excinfo:
        read_detection_log(io.StringIO(cut))
    assert excinfo.value.line_number == len(lines) - 1
    assert 'truncated' in str(excinfo.value)


def test_last_record_without_line_end_is_truncated():
    text = "# scwqkd-log v1, n_cycles=20\n1,0,0,0,0\n5,1,1,1,1"
    with pytest.raises(MalformedLogError) as excinfo:
        read_detection_log(io.StringIO(text))
    assert excinfo.value.line_number == 3
    assert 'truncated' in str(excinfo.value)


def test_log_without_end_marker_is_read():
    text = "# scwqkd-log v1, n_cycles=20\n1,0,0,0,0\n5,1,1,1,1\n"
    log, metadata = read_detection_log(io.StringIO(text))
    assert metadata == {}
    assert log.n_cycles == 20
    assert list(log.cycle_index) == [1, 5]
    assert list(log.alice_states) == [0, 3]
    assert list(log.bob_states) == [0, 3]
    headless = read_detection_log(io.StringIO("# scwqkd-log v1, n_cycles=20\n"))[0]
    assert len(headless) == 0


@pytest.mark.parametrize("bad, line_number", [
    ("4,1,0,1\n", 2),
    ("4,1,x,1,0\n", 2),
    ("4,1,2,1,0\n", 2),
])
def test_bad_record_names_its_line(bad, line_number):
    text = "# scwqkd-log v1, n_cycles=20\n" + bad + "# end clicks=1\n"
    with pytest.raises(MalformedLogError) as excinfo:
        read_detection_log(io.StringIO(text))
    assert excinfo.value.line_number == line_number


def test_missing_header_and_count_mismatch():
    with pytest.raises(MalformedLogError) as excinfo:
        read_detection_log(io.StringIO("0,0,0,0,0\n"))
    assert excinfo.value.line_number == 1
    text = "# scwqkd-log v1, n_cycles=20\n1,0,0,0,0\n# end clicks=2\n"
    with pytest.raises(MalformedLogError) as excinfo:
        read_detection_log(io.StringIO(text))
    assert excinfo.value.line_number == 3


def test_out_of_order_cycle_is_malformed():
    text = "# scwqkd-log v1, n_cycles=20\n5,0,0,0,0\n4,0,0,0,0\n# end clicks=2\n"
    with pytest.raises(MalformedLogError) as excinfo:
        read_detection_log(io.StringIO(text))
    assert excinfo.value.line_number == 3
