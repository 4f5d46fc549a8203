import numpy as np
import pytest

from stancelab.corpus import Corpus, StanceLabel, Tweet
from stancelab.embedfeat import EmbeddingTable
from stancelab.netgraph import RelationRecord, build_graph


@pytest.fixture
def tiny_corpus():
    labels = [StanceLabel.AGAINST, StanceLabel.AGAINST, StanceLabel.FAVOR,
              StanceLabel.FAVOR, StanceLabel.NONE, StanceLabel.NONE]
    return Corpus([
        Tweet(id=f"t{i}", author_id=f"u{i % 3}", text=f"parola{i} test #tag !",
              label=lab)
        for i, lab in enumerate(labels)
    ])


@pytest.fixture
def tiny_table():
    vecs = {
        "a": np.array([1.0, 0.0, 0.0]),
        "b": np.array([0.0, 1.0, 0.0]),
        "c": np.array([0.0, 0.0, 1.0]),
        "d": np.array([1.0, 1.0, 0.0]),
        "e": np.array([0.5, 0.5, 0.5]),
    }
    return EmbeddingTable(name="custom", dim=3, vectors=vecs)


def six_user_records():
    """The mixed-relations fixture used across graph tests."""
    return [
        RelationRecord("A", "B", "friend"),
        RelationRecord("A", "B", "retweet"),
        RelationRecord("A", "B", "retweet"),   # duplicate, must not add weight
        RelationRecord("B", "C", "friend"),
        RelationRecord("B", "C", "quote"),
        RelationRecord("B", "C", "reply"),
        RelationRecord("C", "A", "friend"),
        RelationRecord("D", "E", "friend"),
        RelationRecord("E", "F", "retweet"),   # no friendship: dropped when required
        RelationRecord("F", "F", "friend"),    # self-loop: dropped
    ]


@pytest.fixture
def six_user_graph():
    return six_user_records()


def make_clique_records(members, relation="friend"):
    return [RelationRecord(u, v, relation) for u in members for v in members if u != v]


@pytest.fixture
def two_triangles_graph():
    records = make_clique_records(["a1", "a2", "a3"]) + \
        make_clique_records(["b1", "b2", "b3"])
    return build_graph(records, require_friendship=False)
