import numpy as np
import pytest

from language_diversity.language import (
    Agent,
    ComprehensionCache,
    build_cache,
    comprehension,
    derive_decoding,
    derive_encoding,
    mutual_comprehension,
    overall_comprehension,
    random_baseline,
    within_community_comprehension,
)

M, S, Q = 8, 15, 4


def permutation_agent(agent_id: int, permutation, signals: int = S) -> Agent:
    assoc = np.zeros((len(permutation), signals))
    assoc[np.arange(len(permutation)), permutation] = Q
    return Agent.from_association(agent_id, assoc)


def uniform_agent(agent_id: int) -> Agent:
    return Agent.from_association(agent_id, np.ones((M, S)))


def test_encoding_normalises_rows():
    enc = derive_encoding([[2, 2], [0, 4]])
    assert np.allclose(enc, [[0.5, 0.5], [0.0, 1.0]])


def test_encoding_rejects_empty_meaning_row():
    with pytest.raises(ValueError, match="zero sum"):
        derive_encoding([[0, 0], [1, 3]])


def test_encoding_of_constant_matrix_is_uniform():
    assert np.allclose(derive_encoding(np.full((3, 5), 7.0)), 0.2)


def test_encoding_rejects_negative_counts():
    with pytest.raises(ValueError, match="non-negative"):
        derive_encoding([[1, -1], [1, 1]])


def test_decoding_normalises_columns():
    dec = derive_decoding([[2, 2], [0, 4]])
    assert dec.shape == (2, 2)
    assert np.allclose(dec, [[1.0, 0.0], [1 / 3, 2 / 3]])


def test_unused_signal_decodes_to_zero_row():
    dec = derive_decoding([[1, 0, 3], [2, 0, 0]])
    assert np.array_equal(dec[1], [0.0, 0.0])
    assert np.allclose(dec.sum(axis=1), [1.0, 0.0, 1.0])


def test_bijective_code_is_understood_perfectly():
    agent = permutation_agent(0, [3, 1, 0, 2], signals=4)
    assert comprehension(agent.enc, agent.dec) == pytest.approx(1.0)


def test_uniform_receiver_matches_random_baseline():
    sender = Agent.from_association(0, np.random.default_rng(1).integers(1, 5, size=(M, S)))
    receiver = uniform_agent(1)
    assert comprehension(sender.enc, receiver.dec) == pytest.approx(1 / M, abs=1e-12)


def test_single_signal_sender_is_understood_for_one_meaning():
    sender = Agent.from_association(0, np.tile(np.eye(1, S, 0) * Q, (M, 1)))
    receiver = permutation_agent(1, list(range(M)))
    assert comprehension(sender.enc, receiver.dec) == pytest.approx(1 / M)


def test_comprehension_rejects_incompatible_shapes():
    with pytest.raises(ValueError, match="incompatible"):
        comprehension(np.ones((2, 3)) / 3, np.ones((2, 3)))


def test_mutual_comprehension_averages_both_directions():
    single = Agent.from_association(0, np.tile(np.eye(1, S, 0) * Q, (M, 1)))
    uniform = uniform_agent(1)
    expected = (1 / M + 1 / (M * S)) / 2
    assert mutual_comprehension(single, uniform) == pytest.approx(expected)
    assert mutual_comprehension(uniform, single) == pytest.approx(expected)


def test_self_comprehension_is_one_only_for_injective_deterministic_codes():
    rng = np.random.default_rng(7)
    for index in range(5):
        agent = permutation_agent(index, rng.permutation(S)[:M])
        assert comprehension(agent.enc, agent.dec) == pytest.approx(1.0)
    homonymous = permutation_agent(9, [0, 0, 1, 2, 3, 4, 5, 6])
    assert comprehension(homonymous.enc, homonymous.dec) < 1.0


def test_agent_matrices_are_read_only():
    agent = uniform_agent(0)
    assert agent.meanings == M
    assert agent.signals == S
    with pytest.raises(ValueError):
        agent.assoc[0, 0] = 5.0


def test_cache_of_single_agent_is_one_by_one():
    cache = build_cache([permutation_agent(0, list(range(M)))])
    assert cache.f.shape == (1, 1)
    assert cache.f[0, 0] == pytest.approx(1.0)


def test_cache_of_identical_bijective_agents_is_all_ones():
    agents = [permutation_agent(index, list(range(M))) for index in range(4)]
    assert np.allclose(build_cache(agents).f, 1.0)


def test_cache_matches_pairwise_recomputation():
    rng = np.random.default_rng(3)
    agents = [
        Agent.from_association(index, rng.multinomial(Q, np.full(S, 1 / S), size=M)) for index in range(5)
    ]
    cache = build_cache(agents)
    for i, left in enumerate(agents):
        for j, right in enumerate(agents):
            assert cache.c[i, j] == pytest.approx(comprehension(left.enc, right.dec), abs=1e-12)
            assert cache.f[i, j] == pytest.approx(mutual_comprehension(left, right), abs=1e-12)
    assert np.allclose(cache.f, cache.f.T)


def test_cache_rejects_mixed_shapes():
    with pytest.raises(ValueError, match="association shape"):
        build_cache([uniform_agent(0), Agent.from_association(1, np.ones((M, S + 1)))])


def test_from_mutual_validates_matrix():
    with pytest.raises(ValueError, match="symmetric"):
        ComprehensionCache.from_mutual([[1.0, 0.2], [0.3, 1.0]])
    with pytest.raises(ValueError, match=r"\[0, 1\]"):
        ComprehensionCache.from_mutual([[1.0, 1.2], [1.2, 1.0]])
    with pytest.raises(ValueError, match="square"):
        ComprehensionCache.from_mutual(np.ones((2, 3)))


def test_within_comprehension_of_pair_is_their_mutual_value():
    cache = ComprehensionCache.from_mutual([[1.0, 0.4, 0.1], [0.4, 1.0, 0.2], [0.1, 0.2, 1.0]])
    assert within_community_comprehension({0, 1}, cache) == pytest.approx(0.4)
    assert within_community_comprehension({0, 1, 2}, cache) == pytest.approx(0.7 / 3)


def test_within_comprehension_edge_cases():
    cache = ComprehensionCache.from_mutual(np.full((3, 3), 0.5))
    assert within_community_comprehension({2}, cache) == 0.0
    with pytest.raises(ValueError, match="at least one member"):
        within_community_comprehension(set(), cache)
    with pytest.raises(ValueError, match="indices"):
        within_community_comprehension({0, 3}, cache)


def test_uniform_population_sits_at_random_baseline():
    cache = build_cache([uniform_agent(index) for index in range(20)])
    assert overall_comprehension(cache) == pytest.approx(random_baseline(M), abs=1e-12)


def test_random_baseline_requires_meanings():
    assert random_baseline(4) == 0.25
    with pytest.raises(ValueError):
        random_baseline(0)
