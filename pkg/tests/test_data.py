"""CSV ingestion."""

import math

import numpy as np
import pytest

from sthygarch.data import load_returns


def _write(tmp_path, text, name="series.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestPlainReturns:
    def test_single_column_needs_no_selection(self, tmp_path):
        path = _write(tmp_path, "ret\n0.5\n-1.25\n3e-2\n")
        np.testing.assert_array_equal(load_returns(path),
                                      [0.5, -1.25, 0.03])

    def test_column_by_name(self, tmp_path):
        path = _write(tmp_path, "date,ret\n2021-01-04,0.5\n2021-01-05,-2\n")
        np.testing.assert_array_equal(load_returns(path, column="ret"),
                                      [0.5, -2.0])

    def test_comment_lines_skipped(self, tmp_path):
        # files written by the CLI carry "# key=value" metadata up top
        path = _write(tmp_path, "# command=simulate seed=3\n# theta=0.35\n"
                                "t,y,h\n1,0.5,0.8\n2,-2,0.9\n")
        np.testing.assert_array_equal(load_returns(path, column="y"),
                                      [0.5, -2.0])

    def test_error_rows_count_physical_lines(self, tmp_path):
        path = _write(tmp_path, "# meta\nret\n0.5\nbad\n")
        with pytest.raises(ValueError, match="row 4"):
            load_returns(path)

    def test_column_by_position(self, tmp_path):
        path = _write(tmp_path, "date,ret\nx,0.5\ny,-2\n")
        np.testing.assert_array_equal(load_returns(path, column=1),
                                      [0.5, -2.0])

    def test_multi_column_without_selection_rejected(self, tmp_path):
        path = _write(tmp_path, "date,ret\nx,0.5\n")
        with pytest.raises(ValueError, match="pass column="):
            load_returns(path)

    def test_unknown_column_name(self, tmp_path):
        path = _write(tmp_path, "date,ret\nx,0.5\n")
        with pytest.raises(ValueError, match="no column 'close'"):
            load_returns(path, column="close")

    def test_column_index_out_of_range(self, tmp_path):
        path = _write(tmp_path, "date,ret\nx,0.5\n")
        with pytest.raises(ValueError, match="out of range"):
            load_returns(path, column=2)


class TestBadInput:
    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_returns(tmp_path / "nope.csv")

    def test_empty_file(self, tmp_path):
        with pytest.raises(ValueError, match="empty"):
            load_returns(_write(tmp_path, ""))

    def test_header_only(self, tmp_path):
        with pytest.raises(ValueError, match="no data rows"):
            load_returns(_write(tmp_path, "ret\n"))

    def test_blank_cell_reports_its_row(self, tmp_path):
        # header is row 1, so the first data row is row 2
        path = _write(tmp_path, "ret\n\n0.5\n1.0\n")
        with pytest.raises(ValueError, match="row 2"):
            load_returns(path)

    def test_non_numeric_cell_reports_row_and_column(self, tmp_path):
        path = _write(tmp_path, "date,ret\nx,0.5\ny,oops\n")
        with pytest.raises(ValueError, match=r"'oops' in column 'ret' at row 3"):
            load_returns(path, column="ret")

    def test_nan_cell_rejected(self, tmp_path):
        path = _write(tmp_path, "ret\n0.5\nnan\n")
        with pytest.raises(ValueError, match="non-finite"):
            load_returns(path)


class TestPriceTransform:
    def test_flat_prices_give_zero_return(self, tmp_path):
        path = _write(tmp_path, "px\n100\n100\n")
        out = load_returns(path, prices=True)
        np.testing.assert_array_equal(out, [0.0])

    def test_one_percent_log_step(self, tmp_path):
        path = _write(tmp_path, f"px\n100\n{100 * math.exp(0.01):.12f}\n")
        out = load_returns(path, prices=True)
        assert out.shape == (1,)
        assert out[0] == pytest.approx(1.0, abs=1e-9)

    def test_length_drops_by_one(self, tmp_path):
        path = _write(tmp_path, "px\n100\n101\n102\n103\n")
        assert load_returns(path, prices=True).shape == (3,)

    def test_single_price_rejected(self, tmp_path):
        path = _write(tmp_path, "px\n100\n")
        with pytest.raises(ValueError, match="at least 2 rows"):
            load_returns(path, prices=True)

    def test_nonpositive_price_rejected_with_row(self, tmp_path):
        path = _write(tmp_path, "px\n100\n0\n101\n")
        with pytest.raises(ValueError, match="row 3"):
            load_returns(path, prices=True)

    def test_returns_match_manual_log_diff(self, tmp_path):
        px = [100.0, 102.5, 99.1, 105.0]
        path = _write(tmp_path, "px\n" + "\n".join(str(p) for p in px) + "\n")
        out = load_returns(path, prices=True)
        manual = 100 * np.diff(np.log(px))
        np.testing.assert_allclose(out, manual, rtol=1e-12)
