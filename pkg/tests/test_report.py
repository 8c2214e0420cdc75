from monoglot import report


def test_training_curve_writes_png(tmp_path):
    rows = [(1, 200, 2e-4, 3.5, 12.0), (2, 400, 2e-4, 2.1, 6.5), (3, 600, 1.4e-4, 1.8, 5.9)]
    out = tmp_path / "curve.png"
    assert report.training_curve(rows, out) == out
    assert out.stat().st_size > 0
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_training_curve_empty_rows(tmp_path):
    assert report.training_curve([], tmp_path / "curve.png") is None


def test_score_histogram_writes_png(tmp_path):
    out = tmp_path / "hist.png"
    assert report.score_histogram([0.1, 0.5, 0.9, 1.0], "GLEU", out) == out
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
