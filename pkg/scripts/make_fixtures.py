"""Regenerate the committed fixtures under ``fixtures/``."""

import json
from pathlib import Path

import numpy as np

from qent.entanglement import werner_state
from qent.io import state_document
from qent.psa import KS18_VECTORS, ks18_projectors

OUT = Path(__file__).resolve().parent.parent / "fixtures"


def dump(name: str, doc: dict) -> None:
    (OUT / name).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def main() -> None:
    OUT.mkdir(exist_ok=True)
    r = 1 / np.sqrt(2)
    dump("phi_plus.json", state_document("pure", np.array([r, 0, 0, r]), "phi_plus", "(|00> + |11>)/sqrt(2)"))
    dump("product_00.json", state_document("pure", np.array([1, 0, 0, 0]), "product_00", "|00>"))
    dump("product_01.json", state_document("pure", np.array([0, 1, 0, 0]), "product_01", "|01>"))
    dump("werner_05.json", state_document("density", werner_state(0.5), "werner_05", "Werner state, w = 0.5"))
    dump("maximally_mixed.json", state_document("density", np.eye(4) / 4, "maximally_mixed", "I/4"))
    labels = ["v%d(%s)" % (k, ",".join(str(c) for c in v)) for k, v in enumerate(KS18_VECTORS)]
    dump(
        "ks18.json",
        state_document("projector_family", ks18_projectors(), "ks18", "18 rank-1 projectors in d=4", labels),
    )
    dump("standard_2x2.json", {"d1": 2, "d2": 2, "alignment": "identity"})


if __name__ == "__main__":
    main()
