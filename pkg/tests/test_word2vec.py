import numpy as np
import pytest

from oracles import central_diff, rel_err
from volsent import word2vec as w2v
from volsent.errors import EmptyCorpus, InvalidId, ZeroVector
from volsent.word2vec import EmbeddingMatrix, W2vConfig


def test_gradient_check():
    rng = np.random.default_rng(0)
    v = rng.normal(size=(1, 6))
    u = rng.normal(size=(1, 6))
    neg = rng.normal(size=(1, 4, 6))
    _, dv, du, dn = w2v.sgns_loss_and_grads(v, u, neg)

    def f():
        return float(w2v.sgns_loss_and_grads(v, u, neg)[0].sum())

    assert rel_err(dv, central_diff(f, v)) < 1e-5
    assert rel_err(du, central_diff(f, u)) < 1e-5
    assert rel_err(dn, central_diff(f, neg)) < 1e-5


def test_loss_value_by_hand():
    v = np.array([[1.0, 0.0]])
    u = np.array([[2.0, 0.0]])
    neg = np.array([[[0.0, 1.0]]])
    loss = w2v.sgns_loss_and_grads(v, u, neg)[0][0]
    assert loss == pytest.approx(np.log1p(np.exp(-2.0)) + np.log(2.0), abs=1e-12)


def cluster_corpus(n=200, seed=0):
    """Ids 2..6 form cluster A, 7..11 cluster B; each sentence draws from one cluster."""
    rng = np.random.default_rng(seed)
    docs = []
    for i in range(n):
        base = 2 if i % 2 == 0 else 7
        docs.append(list(rng.integers(base, base + 5, size=8)) + [0, 0])
    return docs


@pytest.fixture(scope="module")
def trained():
    cfg = W2vConfig(dim=16, window=3, negatives=5, epochs=5, lr=0.05, batch_size=16, seed=3)
    return w2v.train_embeddings(cluster_corpus(), 12, cfg)


def test_cluster_geometry(trained):
    a, b = range(2, 7), range(7, 12)
    within = [w2v.cosine_similarity(trained, i, j) for grp in (a, b) for i in grp for j in grp if i < j]
    between = [w2v.cosine_similarity(trained, i, j) for i in a for j in b]
    assert np.mean(within) - np.mean(between) >= 0.2


def test_co_occurrence_pair():
    # "bull"=2 and "rally"=3 always appear together next to topic words 4..6;
    # the other sentences use topic words 7..11 only
    rng = np.random.default_rng(1)
    docs = []
    for i in range(200):
        if i % 2:
            docs.append(list(rng.integers(7, 12, size=6)))
            continue
        filler = list(rng.integers(4, 7, size=4))
        pos = int(rng.integers(0, 4))
        docs.append(filler[:pos] + [2, 3] + filler[pos:])
    e = w2v.train_embeddings(docs, 12, W2vConfig(dim=16, window=2, epochs=5, lr=0.05, batch_size=16, seed=0))
    others = [w2v.cosine_similarity(e, 2, j) for j in range(7, 12)]
    assert w2v.cosine_similarity(e, 2, 3) > max(others)


def test_training_contract(trained):
    assert not np.any(trained.input_vectors[0])
    assert np.all(np.isfinite(trained.loss_history))
    assert trained.loss_history[-1] <= trained.loss_history[0]
    assert trained.input_vectors.shape == (12, 16)


def test_epochs_zero_returns_init():
    cfg = W2vConfig(dim=8, epochs=0, seed=5)
    e = w2v.train_embeddings(cluster_corpus(10), 12, cfg)
    init = w2v.init_embeddings(12, 8, np.random.default_rng(5))
    np.testing.assert_array_equal(e.input_vectors, init.input_vectors)
    assert not np.any(e.input_vectors[0])


def test_deterministic():
    cfg = W2vConfig(dim=8, epochs=2, seed=11)
    a = w2v.train_embeddings(cluster_corpus(40), 12, cfg)
    b = w2v.train_embeddings(cluster_corpus(40), 12, cfg)
    np.testing.assert_array_equal(a.input_vectors, b.input_vectors)
    np.testing.assert_array_equal(a.output_vectors, b.output_vectors)


def test_train_errors():
    with pytest.raises(EmptyCorpus):
        w2v.train_embeddings([], 5)
    with pytest.raises(EmptyCorpus):
        w2v.train_embeddings([[0, 0]], 5)
    with pytest.raises(InvalidId):
        w2v.train_embeddings([[2, 9]], 5)
    with pytest.raises(ValueError):
        W2vConfig(window=0)


def hand_matrix():
    rows = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [-1.0, 0.0]])
    return EmbeddingMatrix(rows, np.zeros_like(rows))


def test_cosine_examples():
    e = hand_matrix()
    assert w2v.cosine_similarity(e, 2, 2) == pytest.approx(1.0)
    assert w2v.cosine_similarity(e, 1, 3) == pytest.approx(0.0)
    assert w2v.cosine_similarity(e, 1, 4) == pytest.approx(-1.0)
    with pytest.raises(ZeroVector):
        w2v.cosine_similarity(e, 0, 1)


def test_nearest_neighbors_by_hand():
    e = hand_matrix()
    s = 1 / np.sqrt(2)
    got = w2v.nearest_neighbors(e, 1, 3)
    assert [i for i, _ in got] == [2, 3, 4]
    assert [v for _, v in got] == pytest.approx([s, 0.0, -1.0])
    # ids 1 and 3 tie at 1/sqrt(2) from id 2; lower id first
    assert [i for i, _ in w2v.nearest_neighbors(e, 2, 2)] == [1, 3]
    assert w2v.nearest_neighbors(e, 1, 0) == []
    with pytest.raises(ZeroVector):
        w2v.nearest_neighbors(e, 0, 1)
    with pytest.raises(InvalidId):
        w2v.nearest_neighbors(e, 1, 5)


def test_text_round_trip(trained):
    tokens = [f"t{i}" for i in range(12)]
    toks, back = w2v.from_text(w2v.to_text(trained, tokens))
    assert toks == tokens
    np.testing.assert_array_equal(back.input_vectors, trained.input_vectors)
