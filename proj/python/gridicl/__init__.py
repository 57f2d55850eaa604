"""Grid-world instruction data, support sets and analysis.

Thin wrappers over the compiled core. States, examples and support records
are plain dicts in the same layout the command-line tool writes.
"""

import json

import numpy as np

from . import _core
from ._core import (
    Error,
    IvfIndex,
    __version__,
    action_codes,
    apply_permutation,
    build_prompt,
    check_retention,
    format_compact,
    parse_instruction,
    parse_response,
    pattern_frequency,
    sample_permutation,
    sample_zipf,
    word_codes,
    word_tokens,
    zipf_fit,
)


def _dump(obj):
    return obj if isinstance(obj, str) else json.dumps(obj)


def random_state(seed, grid=6, objects=5):
    return json.loads(_core.random_state(seed, grid, objects))


def solve(state, instruction):
    """Oracle actions for the instruction in state, or None if it does not resolve."""
    return _core.solve(_dump(state), instruction)


def simulate(state, actions):
    return json.loads(_core.simulate(_dump(state), list(actions)))


def encode_one_hot(state):
    return _core.encode_one_hot(_dump(state))


def generate_dataset(seed, counts, grid=6, min_objects=3, max_objects=10, workers=1):
    """Examples as dicts; counts maps split names ("TRAIN", "A".."H") to sizes."""
    lines = _core.generate_dataset(seed, dict(counts), grid, min_objects, max_objects, workers)
    return [json.loads(line) for line in lines]


def classify(example):
    return _core.classify(_dump(example))


def heuristic_supports(example, n=16):
    return json.loads(_core.heuristic_supports(_dump(example), n))


def random_supports(example, seed, n=16):
    return json.loads(_core.random_supports(_dump(example), seed, n))


def support_criteria(records):
    return json.loads(_core.support_criteria([_dump(r) for r in records]))


def validity_correctness(records):
    return json.loads(_core.validity_correctness([_dump(r) for r in records]))


def export_icl_record(record, id, seed, permute=True, permute_words=False):
    return json.loads(_core.export_icl_record(_dump(record), id, seed, permute, permute_words))


def brute_force_search(vectors, query, k):
    return _core.brute_force_search(np.asarray(vectors, dtype=np.float32), np.asarray(query, dtype=np.float32), k)
