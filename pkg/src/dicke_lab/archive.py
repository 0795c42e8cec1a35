"""Self-describing result archives and plot-data export.

An archive is a directory: ``manifest.json`` (provenance metadata plus
dataset descriptors with checksums) and one tab-separated ``.tsv`` per
dataset.  Every column carries a unit tag in the header; values are written
with 17 significant digits so a parse round-trip is exact.  Archives contain
no wall-clock fields: identical (config, seed) runs produce bit-identical
bytes.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import CacheError, RecipeError

CODE_VERSION = "0.1.0"


@dataclass
class Dataset:
    """Named columnar table; ``columns`` pairs (name, unit)."""

    name: str
    columns: list
    data: np.ndarray

    def header(self) -> str:
        return "\t".join(f"{name}[{unit}]" for name, unit in self.columns)

    def to_text(self) -> str:
        lines = [self.header()]
        for row in np.atleast_2d(self.data):
            lines.append("\t".join(f"{v:.17g}" for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, name: str, text: str) -> "Dataset":
        lines = text.strip("\n").split("\n")
        columns = []
        for token in lines[0].split("\t"):
            col, unit = token.rsplit("[", 1)
            columns.append((col, unit.rstrip("]")))
        data = np.array([[float(v) for v in line.split("\t")]
                         for line in lines[1:]])
        return cls(name, columns, data)


@dataclass
class ResultArchive:
    """Provenance header plus named datasets, storable as a directory."""

    meta: dict
    datasets: dict = field(default_factory=dict)

    def add(self, dataset: Dataset) -> None:
        self.datasets[dataset.name] = dataset

    def save(self, directory: str) -> str:
        os.makedirs(directory, exist_ok=True)
        descriptors = {}
        for name in sorted(self.datasets):
            text = self.datasets[name].to_text()
            digest = hashlib.sha256(text.encode()).hexdigest()
            with open(os.path.join(directory, f"{name}.tsv"), "w") as fh:
                fh.write(text)
            descriptors[name] = {
                "file": f"{name}.tsv",
                "sha256": digest,
                "columns": [list(c) for c in self.datasets[name].columns],
            }
        manifest = {"meta": self.meta, "datasets": descriptors,
                    "code_version": CODE_VERSION}
        with open(os.path.join(directory, "manifest.json"), "w") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=1)
            fh.write("\n")
        return directory

    @classmethod
    def load(cls, directory: str, verify: bool = True) -> "ResultArchive":
        try:
            with open(os.path.join(directory, "manifest.json")) as fh:
                manifest = json.load(fh)
        except FileNotFoundError as exc:
            raise CacheError(f"no archive manifest in {directory}") from exc
        archive = cls(meta=manifest["meta"])
        for name, desc in manifest["datasets"].items():
            with open(os.path.join(directory, desc["file"])) as fh:
                text = fh.read()
            if verify:
                digest = hashlib.sha256(text.encode()).hexdigest()
                if digest != desc["sha256"]:
                    raise CacheError(f"dataset {name} in {directory} is corrupt")
            archive.add(Dataset.from_text(name, text))
        return archive


# One export recipe per figure-style product: (dataset, columns or None=all).
_RECIPES = {
    "fig1a": ("chaos_fraction", None),
    "fig1b": ("r_statistic", None),
    "fig2a": ("peres", ["epsilon", "n_diag"]),
    "fig2b": ("peres", ["epsilon", "nex_diag"]),
    "fig2c": ("delta_mic", ["epsilon", "delta_n"]),
    "fig2d": ("delta_mic", ["epsilon", "delta_nex"]),
    "fig3a": ("diag_hist_n", None),
    "fig3b": ("diag_hist_nex", None),
    "fig3c": ("offdiag_hist_n", None),
    "fig3d": ("offdiag_hist_nex", None),
    "fig4a": ("tc_entropy_lattice", ["epsilon", "exp_s_en_scaled"]),
    "fig4b": ("dicke_entropy_lattice", ["epsilon", "exp_s_en_scaled"]),
    "fig5a": ("entropy_lattice", ["epsilon", "exp_s_en_scaled"]),
    "fig5b": ("entropy_delta_mic", ["epsilon", "delta_s_en"]),
    "fig6a": ("entropy_lattice", ["epsilon", "s_sh_native_scaled",
                                  "s_sh_fock_scaled"]),
    "fig6b": ("entropy_delta_mic", ["epsilon", "delta_s_sh_native",
                                    "delta_s_sh_fock"]),
    "fig7a": ("entropy_lattice", ["epsilon", "s_sh_native_scaled"]),
    "fig7b": ("entropy_delta_mic", ["epsilon", "delta_s_sh_native"]),
    "dos": ("dos", None),
}


def export_plot_data(archive: ResultArchive, figure_recipe: str,
                     out_dir: str) -> str:
    """Write one figure's plain delimited data file from an archive.

    The output keeps the archive's header/precision conventions, plus a JSON
    sidecar with any fit metadata the recipe's dataset carries.
    """
    if figure_recipe not in _RECIPES:
        raise RecipeError(
            f"unknown recipe {figure_recipe!r}; known: {sorted(_RECIPES)}")
    ds_name, wanted = _RECIPES[figure_recipe]
    if ds_name not in archive.datasets:
        raise RecipeError(
            f"archive lacks dataset {ds_name!r} needed by {figure_recipe!r}; "
            f"available: {sorted(archive.datasets)}")
    ds = archive.datasets[ds_name]
    if wanted is None:
        out = ds
    else:
        names = [c[0] for c in ds.columns]
        missing = [w for w in wanted if w not in names]
        if missing:
            raise RecipeError(
                f"dataset {ds_name!r} lacks columns {missing}; has {names}")
        idx = [names.index(w) for w in wanted]
        out = Dataset(ds.name, [ds.columns[i] for i in idx],
                      np.atleast_2d(ds.data)[:, idx])
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{figure_recipe}.dat")
    with open(path, "w") as fh:
        fh.write(out.to_text())
    sidecar = archive.meta.get("fits", {}).get(ds_name)
    if sidecar is not None:
        with open(os.path.join(out_dir, f"{figure_recipe}.meta.json"), "w") as fh:
            json.dump(sidecar, fh, sort_keys=True, indent=1)
            fh.write("\n")
    return path