import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from vibdenoise.estimators import ARDenoiser, TransformerDenoiser
from vibdenoise.signals import NoiseSpec, SignalSpec, build_dataset, synth_clean


@pytest.fixture(scope="module")
def windows():
    clean = synth_clean(SignalSpec(duration=3.2))
    ds = build_dataset(clean, NoiseSpec("gaussian", 0.1, 0), 16, 16)
    return ds.noisy, ds.clean


def test_get_params_and_clone():
    est = TransformerDenoiser(d_model=16, n_heads=4, epochs=3)
    params = est.get_params()
    assert params["d_model"] == 16 and params["epochs"] == 3
    assert clone(est).get_params() == params
    assert ARDenoiser(p_max=7).get_params()["p_max"] == 7


def test_transformer_fit_predict(windows):
    X, y = windows
    est = TransformerDenoiser(d_model=16, n_heads=4, d_ff=16, epochs=5, random_state=1).fit(X, y)
    assert est.config_.seq_len == 16
    assert len(est.history_) == 5
    pred = est.predict(X)
    assert pred.shape == X.shape and np.all(np.isfinite(pred))
    again = TransformerDenoiser(d_model=16, n_heads=4, d_ff=16, epochs=5, random_state=1).fit(X, y).predict(X)
    assert pred.tobytes() == again.tobytes()


def test_transformer_not_fitted(windows):
    with pytest.raises(NotFittedError):
        TransformerDenoiser().predict(windows[0])


def test_transformer_width_check(windows):
    X, y = windows
    est = TransformerDenoiser(d_model=8, n_heads=2, d_ff=8, epochs=1).fit(X, y)
    with pytest.raises(ValueError):
        est.predict(X[:, :8])


def test_ar_denoiser_transform(windows):
    X, _ = windows
    est = ARDenoiser(p_max=4, criterion="bic")
    out = est.fit_transform(X)
    assert out.shape == X.shape
    zero = ARDenoiser(max_iterations=0).fit(X).transform(X)
    np.testing.assert_array_equal(zero, X)


def test_ar_in_pipeline(windows):
    X, _ = windows
    pipe = make_pipeline(ARDenoiser(p_max=3))
    assert pipe.fit_transform(X).shape == X.shape


def test_ar_bad_criterion(windows):
    with pytest.raises(ValueError):
        ARDenoiser(criterion="hqic").fit(windows[0])
