import numpy as np
import pandas as pd
import pytest

from src.analysis import spectra
from src.analysis.grids import PatternGrid, uniform_axis
from src.storage import grid_files


def _pattern():
    values = np.linspace(0.0, 1.0, 12).reshape(4, 3)
    values[2, 1] = np.nan
    return PatternGrid(
        uniform_axis(-1.0, 1.0, 4), uniform_axis(0.0, 2.0, 3), values,
        {"source": "test", "settings": {"sidebands": 5}, "shape": [[1, 1.0, 0.0]]},
    )


def test_pattern_round_trip(tmp_path):
    grid = _pattern()
    path = grid_files.write_pattern(tmp_path / "p.lzsm", grid)
    loaded = grid_files.read_pattern(path)
    assert np.array_equal(loaded.eps, grid.eps)
    assert np.array_equal(loaded.amp, grid.amp)
    assert np.array_equal(loaded.values, grid.values, equal_nan=True)
    assert loaded.metadata == grid.metadata

    again = grid_files.write_pattern(tmp_path / "q.lzsm", loaded)
    assert again.read_bytes() == path.read_bytes()


def test_spectrum_round_trip(tmp_path):
    spec = spectra.fourier2d(spectra.fill_missing(_pattern()), pad=2)
    path = grid_files.write_spectrum(tmp_path / "s.lzsm", spec)
    loaded = grid_files.read_spectrum(path)
    assert np.iscomplexobj(loaded.values)
    assert np.array_equal(loaded.values, spec.values)
    assert np.array_equal(loaded.tau_eps, spec.tau_eps)
    assert loaded.metadata["pad"] == 2

    with pytest.raises(grid_files.GridFormatError):
        grid_files.read_pattern(path)


def test_corrupt_files(tmp_path):
    bad = tmp_path / "bad.lzsm"
    bad.write_bytes(b"NOPE" + bytes(32))
    with pytest.raises(grid_files.GridFormatError):
        grid_files.read_pattern(bad)

    good = grid_files.write_pattern(tmp_path / "p.lzsm", _pattern())
    truncated = tmp_path / "short.lzsm"
    truncated.write_bytes(good.read_bytes()[:60])
    with pytest.raises(grid_files.GridFormatError):
        grid_files.read_pattern(truncated)

    header = bytearray(good.read_bytes())
    header[4] = 9
    versioned = tmp_path / "v9.lzsm"
    versioned.write_bytes(bytes(header))
    with pytest.raises(grid_files.GridFormatError, match="version"):
        grid_files.read_pattern(versioned)


def test_table_with_comment_block(tmp_path):
    frame = pd.DataFrame({"eps0": [0.1, 0.2], "p_ex": [0.25, 1.0 / 3.0]})
    comments = grid_files.metadata_lines({"alpha": 0.001, "nested": {"k": 1}})
    path = grid_files.write_table(tmp_path / "t.csv", frame, comments)
    lines = path.read_text().splitlines()
    assert all(line.startswith("#") for line in lines[:len(comments)])
    assert lines[len(comments)] == "eps0,p_ex"
    loaded = grid_files.read_table(path)
    assert np.allclose(loaded["p_ex"], frame["p_ex"], rtol=1e-11)


def test_long_frames():
    grid = _pattern()
    frame = grid_files.pattern_frame(grid)
    assert list(frame.columns) == ["eps0", "A", "p_ex"]
    assert len(frame) == 12
    assert frame["A"].iloc[1] == grid.amp[1]
    assert frame["eps0"].iloc[3] == grid.eps[1]

    spec = spectra.fourier2d(spectra.fill_missing(grid), pad=1)
    sframe = grid_files.spectrum_frame(spec)
    assert np.allclose(sframe["abs_W"], np.hypot(sframe["re_W"], sframe["im_W"]))
