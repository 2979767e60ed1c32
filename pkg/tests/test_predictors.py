import numpy as np
import pytest

from gibbsprobe.core import Dataset
from gibbsprobe.datasets import (
    concentric_circles,
    gaussian_blobs,
    synthetic_credit,
    synthetic_wine,
    xor,
)
from gibbsprobe.errors import (
    ArityError,
    NotDifferentiableError,
    SingularFitError,
    SpecError,
    TrainingDivergedError,
)
from gibbsprobe.predictors import (
    LrSchedule,
    MlpSpec,
    PolyKernel,
    RbfKernel,
    fit_forest,
    fit_kernel_svm,
    fit_linear_regression,
    fit_logistic_regression,
    fit_mlp,
    fit_tree,
    load_predictor,
    predictor_from_json,
    predictor_to_json,
)


def fd_gradient(fn, x, h=1e-5):
    """Central finite differences, the oracle for every analytic gradient."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        grad[i] = (fn(x + e) - fn(x - e)) / (2 * h)
    return grad


def assert_grad_close(analytic, numeric, rel=1e-4):
    scale = max(1.0, float(np.linalg.norm(numeric)))
    assert np.linalg.norm(analytic - numeric) <= rel * scale, (
        f"gradient mismatch: analytic {analytic}, numeric {numeric}")


# ---------------------------------------------------------------- linear


def test_linear_regression_exact_line():
    x = np.linspace(-2, 2, 20)[:, None]
    data = Dataset(x, 2.0 * x[:, 0] + 1.0)
    model = fit_linear_regression(data)
    assert model.xi[0] == pytest.approx(2.0, abs=1e-10)
    assert model.b == pytest.approx(1.0, abs=1e-10)


def test_linear_regression_matches_normal_equations_oracle():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((200, 5))
    y = X @ np.array([1.0, -2.0, 0.5, 0.0, 3.0]) + 0.7 + 0.1 * rng.standard_normal(200)
    model = fit_linear_regression(Dataset(X, y))
    # independent dense solve of the normal equations
    D = np.column_stack([X, np.ones(200)])
    theta = np.linalg.inv(D.T @ D) @ D.T @ y
    np.testing.assert_allclose(np.append(model.xi, model.b), theta, atol=1e-8)


def test_linear_regression_residual_orthogonality():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((100, 3))
    y = rng.standard_normal(100)
    model = fit_linear_regression(Dataset(X, y))
    resid = y - (X @ model.xi + model.b)
    D = np.column_stack([X, np.ones(100)])
    assert np.max(np.abs(D.T @ resid)) / len(y) < 1e-8


def test_linear_regression_singular():
    X = np.ones((5, 2))  # collinear with the intercept column
    with pytest.raises(SingularFitError):
        fit_linear_regression(Dataset(X, np.arange(5.0)))
    with pytest.raises(SingularFitError):
        fit_linear_regression(Dataset(np.eye(2), np.array([1.0, 2.0])))


def test_linear_regression_training_mse_is_locally_minimal():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((50, 2))
    y = X @ np.array([1.0, -1.0]) + 0.3 * rng.standard_normal(50)
    model = fit_linear_regression(Dataset(X, y))
    theta = np.append(model.xi, model.b)
    D = np.column_stack([X, np.ones(50)])
    base = np.mean((D @ theta - y) ** 2)
    for _ in range(20):
        perturbed = theta + 0.01 * rng.standard_normal(3)
        assert np.mean((D @ perturbed - y) ** 2) >= base - 1e-12


def test_linear_predict_matches_hand_dot_products():
    model = fit_linear_regression(Dataset(np.array([[0.0], [1.0], [2.0]]),
                                          np.array([1.0, 3.0, 5.0])))
    for f, expect in ((0.5, 2.0), (1.5, 4.0), (-1.0, -1.0)):
        assert model.predict(np.array([f])) == pytest.approx(expect, abs=1e-9)


# ---------------------------------------------------------------- logistic


def test_logistic_separable_blobs():
    data = gaussian_blobs(200, centers=((-2, 0), (2, 0)), spread=0.4, seed=2)
    model = fit_logistic_regression(data, l2=0.1, steps=2000, lr=0.5)
    assert np.mean(model.predict_batch(data.X) == data.y) >= 0.99


def test_logistic_degenerate_labels():
    rng = np.random.default_rng(3)
    data = Dataset(rng.standard_normal((50, 2)), np.ones(50), n_classes=2)
    model = fit_logistic_regression(data, steps=500, lr=0.5)
    assert np.all(model.predict_proba_batch(data.X)[:, 1] > 0.5)


def test_logistic_l2_crush():
    data = gaussian_blobs(100, centers=((-2, 0), (2, 0)), spread=0.4, seed=2)
    model = fit_logistic_regression(data, l2=1e6, steps=500, lr=0.5)
    assert np.linalg.norm(model.w) < 1e-2


def test_logistic_rejects_nonbinary():
    data = synthetic_wine(10, seed=0)
    with pytest.raises(ArityError):
        fit_logistic_regression(data)


def test_logistic_decision_zero_is_half():
    data = gaussian_blobs(100, seed=0)
    model = fit_logistic_regression(data, steps=300, lr=0.5)
    # construct a point on the decision surface along the first axis
    x = np.zeros(2)
    x[0] = -(model.b + model.w[1] * x[1]) / model.w[0]
    assert model.decision_value(x) == pytest.approx(0.0, abs=1e-9)
    np.testing.assert_allclose(model.predict_proba(x), [0.5, 0.5], atol=1e-9)


# ---------------------------------------------------------------- mlp


def test_mlp_learns_xor():
    data = xor(400, seed=3)
    model = fit_mlp(data, MlpSpec((8, 8, 2)), steps=5000, batch=64,
                    lr_schedule=LrSchedule(0.01, 0.9, 200), seed=0)
    assert np.mean(model.predict_batch(data.X) == data.y) == 1.0


def test_mlp_spec_requires_hidden_layer():
    with pytest.raises(SpecError):
        MlpSpec((2,))
    with pytest.raises(SpecError):
        MlpSpec((4, 2), dropout_rate=1.0)


def test_mlp_divergence_detection():
    rng = np.random.default_rng(1)
    data = Dataset(rng.standard_normal((100, 2)), rng.standard_normal(100))
    with pytest.raises(TrainingDivergedError) as err:
        fit_mlp(data, MlpSpec((8, 1)), steps=2000, batch=32,
                lr_schedule=LrSchedule(1e80, 1.0, 1000), seed=0)
    assert err.value.step >= 0


def test_mlp_input_gradient_matches_finite_differences():
    data = xor(200, seed=3)
    model = fit_mlp(data, MlpSpec((8, 8, 2)), steps=1500, batch=64,
                    lr_schedule=LrSchedule(0.01, 0.9, 200), seed=0)
    rng = np.random.default_rng(7)
    for _ in range(10):
        x = rng.uniform(-1.5, 1.5, size=2)
        analytic = model.input_gradient(x, output=0)
        numeric = fd_gradient(lambda p: model.raw_output(p)[0], x)
        assert_grad_close(analytic, numeric)


def test_mlp_regression_mode():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((300, 2))
    y = X[:, 0] ** 2 + X[:, 1]
    data = Dataset(X, y)
    model = fit_mlp(data, MlpSpec((16, 1)), steps=3000, batch=64,
                    lr_schedule=LrSchedule(0.01, 0.9, 300), seed=0)
    pred = model.predict_batch(X)
    assert np.mean((pred - y) ** 2) < 0.2 * np.var(y)


# ---------------------------------------------------------------- svm


def test_svm_circles_accuracy():
    data = concentric_circles(200, 1.0, 2.0, 0.1, seed=7)
    model = fit_kernel_svm(data, RbfKernel(1.0), C=1.0, seed=0)
    assert np.mean(model.predict_batch(data.X) == data.y) >= 0.98


def test_svm_rejects_nonpositive_c():
    data = concentric_circles(20, seed=0)
    with pytest.raises(SpecError):
        fit_kernel_svm(data, RbfKernel(1.0), C=0.0)


def test_svm_dual_coefficients_box():
    data = concentric_circles(100, 1.0, 2.0, 0.1, seed=4)
    model = fit_kernel_svm(data, RbfKernel(1.0), C=1.5, seed=0)
    assert np.all(np.abs(model.dual_coef) <= 1.5 + 1e-9)
    assert np.all(np.abs(model.dual_coef) > 0)


@pytest.mark.parametrize("kernel", [RbfKernel(1.3), PolyKernel(3, 1.0)])
def test_svm_gradient_matches_finite_differences(kernel):
    data = concentric_circles(120, 1.0, 2.0, 0.1, seed=9)
    model = fit_kernel_svm(data, kernel, C=1.0, seed=0)
    rng = np.random.default_rng(11)
    for _ in range(10):
        x = rng.uniform(-2.5, 2.5, size=2)
        analytic = model.decision_gradient(x)
        numeric = fd_gradient(model.decision_value, x)
        assert_grad_close(analytic, numeric, rel=1e-5)


# ---------------------------------------------------------------- trees


def test_tree_pure_data_single_leaf():
    rng = np.random.default_rng(0)
    data = Dataset(rng.standard_normal((30, 3)), np.zeros(30), n_classes=2)
    tree = fit_tree(data, max_depth=4)
    assert len(tree.feature) == 1 and tree.feature[0] == -1
    np.testing.assert_allclose(tree.predict_proba(np.zeros(3)), [1.0, 0.0])


def test_tree_rejects_bad_depth():
    data = synthetic_wine(10, seed=0)
    with pytest.raises(SpecError):
        fit_tree(data, max_depth=0)
    with pytest.raises(SpecError):
        fit_forest(data, n_trees=0, max_depth=3)


def test_forest_wine_validation_accuracy():
    train = synthetic_wine(60, seed=5)
    hold = synthetic_wine(40, seed=99)
    forest = fit_forest(train, n_trees=100, max_depth=8, seed=2)
    assert np.mean(forest.predict_batch(hold.X) == hold.y) >= 0.90


def test_forest_probability_is_mean_of_trees():
    data = synthetic_wine(30, seed=1)
    forest = fit_forest(data, n_trees=20, max_depth=4, seed=3)
    rng = np.random.default_rng(0)
    for _ in range(10):
        x = data.X[rng.integers(data.n)] + 0.1 * rng.standard_normal(13)
        brute = np.mean([t.predict_proba(x) for t in forest.trees], axis=0)
        np.testing.assert_allclose(forest.predict_proba(x), brute, atol=1e-12)


def test_forest_invariant_to_tree_order():
    from gibbsprobe.predictors import RandomForestModel

    data = synthetic_wine(30, seed=1)
    forest = fit_forest(data, n_trees=15, max_depth=4, seed=3)
    reversed_forest = RandomForestModel(list(reversed(forest.trees)))
    X = synthetic_wine(10, seed=2).X
    np.testing.assert_allclose(forest.predict_proba_batch(X),
                               reversed_forest.predict_proba_batch(X), atol=1e-12)


def test_forest_deterministic_by_seed():
    data = synthetic_wine(30, seed=1)
    a = fit_forest(data, n_trees=10, max_depth=4, seed=7)
    b = fit_forest(data, n_trees=10, max_depth=4, seed=7)
    X = synthetic_wine(15, seed=3).X
    np.testing.assert_array_equal(a.predict_proba_batch(X), b.predict_proba_batch(X))


def test_tree_input_gradient_not_differentiable():
    data = synthetic_wine(20, seed=0)
    tree = fit_tree(data, max_depth=3)
    with pytest.raises(NotDifferentiableError):
        tree.input_gradient(data.X[0])


def test_tree_decision_path_and_node_order():
    data = synthetic_wine(40, seed=2)
    tree = fit_tree(data, max_depth=4)
    path = tree.decision_path(data.X[0])
    assert path[0] == 0
    assert all(a < b for a, b in zip(path, path[1:]))  # preorder: strictly increasing
    assert tree.feature[path[-1]] == -1


# ---------------------------------------------------------------- shared surface


def every_differentiable_model():
    circles = concentric_circles(150, 1.0, 2.0, 0.1, seed=7)
    credit = synthetic_credit(800, seed=1)
    reg_data = Dataset(np.random.default_rng(0).standard_normal((100, 3)),
                       np.random.default_rng(1).standard_normal(100))
    return [
        (fit_linear_regression(reg_data), 3),
        (fit_logistic_regression(credit, steps=400, lr=0.5), 8),
        (fit_mlp(xor(200, seed=3), MlpSpec((8, 8, 2)), steps=800, batch=64,
                 lr_schedule=LrSchedule(0.01, 0.9, 200), seed=0), 2),
        (fit_kernel_svm(circles, RbfKernel(1.0), C=1.0, seed=0), 2),
        (fit_kernel_svm(circles, PolyKernel(3, 1.0), C=1.0, seed=0), 2),
    ]


def test_gradient_audit_all_differentiable_models():
    """Every raw output coordinate of every differentiable model passes a
    central finite-difference check at >= 100 random points total."""
    rng = np.random.default_rng(42)
    for model, dim in every_differentiable_model():
        for _ in range(25):
            x = rng.uniform(-2, 2, size=dim)
            jac = model.raw_jacobian(x)
            for k in range(jac.shape[0]):
                numeric = fd_gradient(lambda p, k=k: model.raw_output(p)[k], x)
                assert_grad_close(jac[k], numeric)


def test_proba_simplex_all_classifiers():
    circles = concentric_circles(100, seed=7)
    credit = synthetic_credit(400, seed=1)
    wine = synthetic_wine(30, seed=1)
    classifiers = [
        fit_logistic_regression(credit, steps=300, lr=0.5),
        fit_kernel_svm(circles, RbfKernel(1.0), seed=0),
        fit_mlp(xor(150, seed=3), MlpSpec((8, 2)), steps=500, batch=64,
                lr_schedule=LrSchedule(0.01, 0.9, 200), seed=0),
        fit_tree(wine, max_depth=4),
        fit_forest(wine, n_trees=10, max_depth=4, seed=1),
    ]
    rng = np.random.default_rng(0)
    for model in classifiers:
        X = rng.uniform(-2, 2, size=(50, model.input_dim))
        proba = model.predict_proba_batch(X)
        assert np.all(proba >= 0)
        np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-9)


def test_serialization_round_trip():
    circles = concentric_circles(80, seed=7)
    wine = synthetic_wine(25, seed=1)
    reg = Dataset(np.random.default_rng(0).standard_normal((50, 2)),
                  np.random.default_rng(1).standard_normal(50))
    models = [
        fit_linear_regression(reg),
        fit_logistic_regression(circles, steps=200, lr=0.5),
        fit_mlp(xor(100, seed=1), MlpSpec((4, 2)), steps=200, batch=32,
                lr_schedule=LrSchedule(0.01, 0.9, 100), seed=0),
        fit_kernel_svm(circles, PolyKernel(3, 1.0), seed=0),
        fit_tree(wine, max_depth=3),
        fit_forest(wine, n_trees=5, max_depth=3, seed=2),
    ]
    rng = np.random.default_rng(5)
    for model in models:
        clone = predictor_from_json(predictor_to_json(model))
        X = rng.uniform(-2, 2, size=(20, model.input_dim))
        if model.is_classifier:
            np.testing.assert_allclose(model.predict_proba_batch(X),
                                       clone.predict_proba_batch(X), atol=0)
        else:
            np.testing.assert_allclose(model.predict_batch(X),
                                       clone.predict_batch(X), atol=0)


def test_save_load_predictor(tmp_path):
    data = concentric_circles(60, seed=0)
    model = fit_kernel_svm(data, RbfKernel(1.0), seed=0)
    path = tmp_path / "model.json"
    from gibbsprobe.predictors import save_predictor

    save_predictor(model, path)
    clone = load_predictor(path)
    x = np.array([0.3, -0.4])
    assert clone.decision_value(x) == model.decision_value(x)


def test_with_params_round_trip():
    data = xor(150, seed=3)
    model = fit_mlp(data, MlpSpec((6, 2)), steps=300, batch=32,
                    lr_schedule=LrSchedule(0.01, 0.9, 100), seed=0)
    params = model.get_params()
    clone = model.with_params(params.theta)
    x = np.array([0.5, -0.5])
    np.testing.assert_allclose(model.raw_output(x), clone.raw_output(x), atol=0)
