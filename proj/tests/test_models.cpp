#include <cmath>
#include <limits>

#include "doctest.h"

#include "fedprov/models.hpp"
#include "support.hpp"

using namespace fedprov;
using fedprov::testing::accuracy;
using fedprov::testing::gradient_error;

namespace {

std::vector<double> zeros14() { return std::vector<double>(14, 0.0); }

LogisticModel random_logistic(Rng& rng) {
  LogisticModel m;
  for (Eigen::Index i = 0; i < 14; ++i) m.weights(i) = standard_normal(rng);
  m.intercept = standard_normal(rng);
  return m;
}

}  // namespace

TEST_SUITE("models") {
  TEST_CASE("sigmoid and lr_predict closed forms") {
    LogisticModel m;
    const auto x = zeros14();
    CHECK(lr_predict(m, x) == 0.5);
    m.intercept = std::log(3.0);
    CHECK(lr_predict(m, x) == doctest::Approx(0.75).epsilon(1e-15));
    const double tiny = sigmoid(-1000.0);
    CHECK_FALSE(std::isnan(tiny));
    CHECK(tiny >= 0.0);
    CHECK(sigmoid(1000.0) == 1.0);
    auto bad = zeros14();
    bad[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(lr_predict(m, bad), ValidationError);
  }

  TEST_CASE("logistic loss at zero parameters is ln 2") {
    Rng rng = make_rng(1, "t");
    const LabeledMatrix batch = fedprov::testing::random_batch(9, rng);
    CHECK(lr_loss_and_grad(LogisticModel{}, batch).loss == std::log(2.0));
    LabeledMatrix one(Eigen::MatrixXd::Zero(1, 14), Eigen::VectorXd::Ones(1));
    CHECK(lr_loss_and_grad(LogisticModel{}, one).grad.values(14) == -0.5);
  }

  TEST_CASE("logistic gradient matches finite differences") {
    Rng rng = make_rng(2, "lr-fd");
    for (int trial = 0; trial < 10; ++trial) {
      const LogisticModel m = random_logistic(rng);
      const LabeledMatrix batch = fedprov::testing::random_batch(16, rng);
      const LossAndGrad lg = lr_loss_and_grad(m, batch);
      const double err = gradient_error(flatten(m).values, lg.grad.values, [&](const Eigen::VectorXd& v) {
        return lr_loss_and_grad(unflatten_logistic(ParamVector{logistic_layout(), v}), batch).loss;
      });
      CHECK(err < 1e-5);
    }
  }

  TEST_CASE("prox_l1 soft-thresholds weights only") {
    LogisticModel m;
    m.weights(0) = 0.5;
    m.weights(1) = -0.2;
    m.intercept = 5.0;
    const ParamVector out = prox_l1(flatten(m), 0.3);
    CHECK(out.values(0) == doctest::Approx(0.2));
    CHECK(out.values(1) == 0.0);
    CHECK(out.values(14) == 5.0);
    CHECK(prox_l1(flatten(m), 0.0).values == flatten(m).values);
    CHECK_THROWS_AS(prox_l1(flatten(m), -1.0), ValidationError);
  }

  TEST_CASE("prox_l1 is the minimizer found by grid search") {
    for (double w : {-2.0, -0.7, -0.1, 0.0, 0.05, 0.4, 1.3}) {
      for (double t : {0.0, 0.1, 0.5}) {
        LogisticModel m;
        m.weights(0) = w;
        const double got = prox_l1(flatten(m), t).values(0);
        double best_u = 0.0;
        double best = std::numeric_limits<double>::infinity();
        for (int k = -40000; k <= 40000; ++k) {
          const double u = k * 1e-4;
          const double obj = 0.5 * (u - w) * (u - w) + t * std::abs(u);
          if (obj < best) {
            best = obj;
            best_u = u;
          }
        }
        CHECK(std::abs(got - best_u) <= 1e-4);
      }
    }
  }

  TEST_CASE("separable toy set is fit exactly") {
    Rng rng = make_rng(3, "separable");
    LabeledMatrix m(Eigen::MatrixXd::Zero(200, 14), Eigen::VectorXd::Zero(200));
    for (Eigen::Index i = 0; i < 200; ++i) {
      const double a = standard_normal(rng);
      const double b = standard_normal(rng);
      const bool pos = a + b > 0.0;
      // Margin of 0.5 on either side of the boundary.
      m.x(i, 0) = a + (pos ? 0.5 : -0.5);
      m.x(i, 1) = b + (pos ? 0.5 : -0.5);
      m.y(i) = pos ? 1.0 : 0.0;
    }
    TrainConfig cfg = default_train_config(ModelFamily::kLogistic);
    cfg.epochs = 200;
    const ParamVector p = flatten(train_logistic(m, cfg));
    CHECK(accuracy(predict(p, m.x), m.y) == 1.0);
  }

  TEST_CASE("vanishing penalty reaches the unpenalized optimum") {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(14);
    w(0) = 1.0;
    w(1) = -0.5;
    const LabeledMatrix m = fedprov::testing::logistic_data(400, w, 0.3, 5);
    const double optimum = fedprov::testing::lr_optimum_by_gd(m, 20000, 0.5);
    TrainConfig cfg = default_train_config(ModelFamily::kLogistic);
    cfg.l1_c = 1e9;
    cfg.batch_size = 400;
    cfg.learning_rate = 0.5;
    cfg.epochs = 5000;
    cfg.early_stop = false;
    const ParamVector p = flatten(train_logistic(m, cfg));
    CHECK(std::abs(fedprov::testing::lr_smooth_loss(p, m) - optimum) < 1e-3);
  }

  TEST_CASE("dominant penalty zeroes every weight") {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(14);
    w(0) = 2.0;
    const LabeledMatrix m = fedprov::testing::logistic_data(300, w, -1.0, 6);
    TrainConfig cfg = default_train_config(ModelFamily::kLogistic);
    cfg.l1_c = 1e-4;
    const LogisticModel model = train_logistic(m, cfg);
    CHECK(model.weights.isZero(0.0));
    CHECK(model.intercept != 0.0);
  }

  TEST_CASE("full-batch descent is monotone") {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(14);
    w(2) = 1.5;
    const LabeledMatrix m = fedprov::testing::logistic_data(300, w, 0.0, 7);
    LogisticModel model;
    double prev = lr_loss_and_grad(model, m).loss;
    for (int s = 0; s < 100; ++s) {
      const LossAndGrad lg = lr_loss_and_grad(model, m);
      model.weights -= 0.1 * lg.grad.values.head(14);
      model.intercept -= 0.1 * lg.grad.values(14);
      const double now = lr_loss_and_grad(model, m).loss;
      CHECK(now <= prev);
      prev = now;
    }
  }

  TEST_CASE("MLP forward on special networks") {
    const MlpModel zero = MlpModel::zeros();
    std::vector<double> x(14, 1.0);
    CHECK(mlp_forward(zero, x).probability == 0.5);

    Rng rng = make_rng(4, "mlp");
    MlpModel dead = mlp_init(128, 128, rng);
    dead.b1.setConstant(-1e6);
    dead.b3 = 0.7;
    for (double v : {-3.0, 0.0, 2.5}) {
      std::fill(x.begin(), x.end(), v);
      CHECK(mlp_forward(dead, x).probability == sigmoid(0.7));
    }

    const MlpModel m = mlp_init(128, 128, rng);
    std::fill(x.begin(), x.end(), 0.3);
    CHECK(mlp_forward(m, x).probability == mlp_forward(m, x).probability);
  }

  TEST_CASE("MLP loss at zero parameters is ln 2") {
    Rng rng = make_rng(5, "t");
    const LabeledMatrix batch = fedprov::testing::random_batch(10, rng);
    CHECK(mlp_loss_and_grad(MlpModel::zeros(), batch, 0.01).loss == doctest::Approx(std::log(2.0)));
  }

  TEST_CASE("MLP gradient matches finite differences") {
    Rng rng = make_rng(6, "mlp-fd");
    for (int trial = 0; trial < 10; ++trial) {
      const MlpModel m = mlp_init(16, 12, rng);
      const LabeledMatrix batch = fedprov::testing::random_batch(8, rng);
      const LossAndGrad lg = mlp_loss_and_grad(m, batch, 0.01);
      const ParamLayout layout = mlp_layout(16, 12);
      const double err = gradient_error(flatten(m).values, lg.grad.values, [&](const Eigen::VectorXd& v) {
        return mlp_loss_and_grad(unflatten_mlp(ParamVector{layout, v}), batch, 0.01).loss;
      });
      CHECK(err < 1e-4);
    }
  }

  TEST_CASE("L2 penalty gradient is alpha / n times the weights") {
    Rng rng = make_rng(7, "l2");
    const MlpModel m = mlp_init(8, 8, rng);
    const LabeledMatrix batch = fedprov::testing::random_batch(5, rng);
    const Eigen::VectorXd diff = mlp_loss_and_grad(m, batch, 0.01).grad.values -
                                 mlp_loss_and_grad(m, batch, 0.0).grad.values;
    MlpModel weights_only = m;
    weights_only.b1.setZero();
    weights_only.b2.setZero();
    weights_only.b3 = 0.0;
    const Eigen::VectorXd expected = (0.01 / 5.0) * flatten(weights_only).values;
    CHECK((diff - expected).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("Adam first step and null gradient") {
    AdamState state;
    Eigen::VectorXd params = Eigen::VectorXd::Zero(1);
    const AdamHyper hyper{};
    adam_step(state, Eigen::VectorXd::Ones(1), params, hyper);
    CHECK(std::abs(params(0) + hyper.learning_rate) < 1e-6);
    CHECK(state.t == 1);

    AdamState idle;
    Eigen::VectorXd fixed = Eigen::VectorXd::Constant(3, 2.0);
    for (int s = 0; s < 50; ++s) adam_step(idle, Eigen::VectorXd::Zero(3), fixed, hyper);
    CHECK(fixed == Eigen::VectorXd::Constant(3, 2.0));
  }

  TEST_CASE("MLP learns XOR where a linear model cannot") {
    const LabeledMatrix m = fedprov::testing::xor_data(800, 1);
    TrainConfig cfg = default_train_config(ModelFamily::kMlp);
    cfg.learning_rate = 0.01;
    cfg.batch_size = 50;
    cfg.epochs = 200;
    cfg.seed = 3;
    const ParamVector mlp = flatten(train_mlp(m, cfg));
    const double mlp_acc = accuracy(predict(mlp, m.x), m.y);
    CHECK(mlp_acc >= 0.95);

    TrainConfig lin = default_train_config(ModelFamily::kLogistic);
    lin.epochs = 200;
    const ParamVector lr = flatten(train_logistic(m, lin));
    // No half-plane labels more than about 70% of the quadrant pattern.
    const double lr_acc = accuracy(predict(lr, m.x), m.y);
    CHECK(lr_acc < 0.75);
    CHECK(mlp_acc - lr_acc > 0.2);
  }

  TEST_CASE("epoch bookkeeping") {
    Rng rng = make_rng(8, "epochs");
    const LabeledMatrix data = fedprov::testing::random_batch(450, rng);
    TrainConfig cfg = default_train_config(ModelFamily::kMlp);
    cfg.hidden = {8, 8};
    cfg.epochs = 0;
    CHECK_THROWS_AS(train_mlp(data, cfg), ValidationError);
    cfg.epochs = 1;
    ParamVector p = initial_params(ModelFamily::kMlp, cfg);
    OptimizerState state = make_optimizer_state(cfg.seed);
    train_epochs(p, data, cfg, state, 1, false);
    CHECK(state.steps == 3);
    CHECK(state.adam.t == 3);
  }

  TEST_CASE("training is a pure function of data, config and seed") {
    Rng rng = make_rng(9, "det");
    const LabeledMatrix data = fedprov::testing::random_batch(300, rng);
    TrainConfig cfg = default_train_config(ModelFamily::kMlp);
    cfg.hidden = {16, 16};
    cfg.epochs = 5;
    cfg.seed = 77;
    CHECK(flatten(train_mlp(data, cfg)).values == flatten(train_mlp(data, cfg)).values);
    TrainConfig lr = default_train_config(ModelFamily::kLogistic);
    lr.seed = 77;
    CHECK(flatten(train_logistic(data, lr)).values == flatten(train_logistic(data, lr)).values);
    LabeledMatrix one_class = data;
    one_class.y.setZero();
    CHECK_THROWS_AS(train_logistic(one_class, lr), ValidationError);
  }

  TEST_CASE("flatten layouts") {
    LogisticModel m;
    for (Eigen::Index i = 0; i < 14; ++i) m.weights(i) = static_cast<double>(i + 1);
    m.intercept = 15.0;
    const ParamVector p = flatten(m);
    REQUIRE(p.values.size() == 15);
    for (Eigen::Index i = 0; i < 15; ++i) CHECK(p.values(i) == static_cast<double>(i + 1));
    const LogisticModel back = unflatten_logistic(p);
    CHECK(back.weights == m.weights);
    CHECK(back.intercept == 15.0);

    CHECK(mlp_layout().size() == 14 * 128 + 128 + 128 * 128 + 128 + 128 + 1);
    CHECK(mlp_layout().size() == 18561);
    Rng rng = make_rng(10, "flat");
    const MlpModel net = mlp_init(128, 128, rng);
    const ParamVector q = flatten(net);
    CHECK(q.values.size() == 18561);
    CHECK(flatten(unflatten_mlp(q)).values == q.values);
    // Row-major: W1(0, 1) is the second value.
    CHECK(q.values(1) == net.w1(0, 1));

    CHECK_THROWS_AS(unflatten_mlp(p), ValidationError);
    CHECK_THROWS_AS(unflatten_logistic(q), ValidationError);
    ParamVector broken = p;
    broken.values.conservativeResize(10);
    CHECK_THROWS_AS(unflatten_logistic(broken), ValidationError);
  }

  TEST_CASE("batched predict agrees with the per-row forms") {
    Rng rng = make_rng(11, "pred");
    const LabeledMatrix data = fedprov::testing::random_batch(20, rng);
    const LogisticModel lr = random_logistic(rng);
    const MlpModel mlp = mlp_init(32, 16, rng);
    const auto plr = predict(flatten(lr), data.x);
    const auto pmlp = predict(flatten(mlp), data.x);
    for (Eigen::Index i = 0; i < 20; ++i) {
      const Eigen::RowVectorXd r = data.x.row(i);
      const std::vector<double> x(r.data(), r.data() + 14);
      CHECK(plr[static_cast<std::size_t>(i)] == doctest::Approx(lr_predict(lr, x)).epsilon(1e-12));
      CHECK(pmlp[static_cast<std::size_t>(i)] ==
            doctest::Approx(mlp_forward(mlp, x).probability).epsilon(1e-12));
    }
  }
}
