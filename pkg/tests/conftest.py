import sys
from pathlib import Path

import numpy as np
import pytest

from sentalign.corpus import AnnotatedSentence, EntityMention, WordVectorTable

sys.path.insert(0, str(Path(__file__).parent))


def make_sentence(sid, tokens, relation="rel_a", head_mid="/m/h", tail_mid="/m/t"):
    return AnnotatedSentence(
        id=sid,
        tokens=list(tokens),
        head=EntityMention(text="head", mid=head_mid),
        tail=EntityMention(text="tail", mid=tail_mid),
        relation=relation,
    )


@pytest.fixture
def tiny_table():
    return WordVectorTable(
        dim=2,
        vectors={
            "a": np.array([1.0, 0.0]),
            "b": np.array([0.0, 1.0]),
            "c": np.array([2.0, 2.0]),
        },
    )
