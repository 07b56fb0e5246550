#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "adaptrl/errors.hpp"
#include "adaptrl/harness.hpp"
#include "adaptrl/linalg.hpp"
#include "adaptrl/user_model.hpp"

using namespace adaptrl;

namespace {

SequenceRecord record(int idx, int level, Feedback f, Outcome o, double t0, int engagement) {
  SequenceRecord r;
  r.seq_index = idx;
  r.level = level;
  r.feedback = f;
  r.outcome = o;
  r.start_time = t0;
  r.end_time = t0 + 4.0;
  for (int i = 0; i < 40; ++i) r.engagement.push_back({t0 + 0.1 * i, engagement});
  r.focus_periods = {{t0, t0 + 1.0}, {t0 + 3.0, t0 + 4.0}};
  return r;
}

SessionLog session(const std::string& user, std::vector<std::tuple<int, Outcome, int>> plays) {
  SessionLog log{user, 1, {}};
  int idx = 1;
  for (auto [level, o, e] : plays) {
    log.sequences.push_back(record(idx, level, Feedback::kNone, o, 5.0 * idx, e));
    ++idx;
  }
  return log;
}

std::vector<std::vector<double>> grid_inputs(const GameConfig& cfg) {
  std::vector<std::vector<double>> x;
  for (const GameState& s : reachable_states(cfg)) {
    if (s.is_initial()) continue;
    const auto e = encode_performance_input(s, cfg.num_levels);
    x.emplace_back(e.begin(), e.end());
  }
  return x;
}

std::vector<std::vector<double>> engagement_grid(const GameConfig& cfg) {
  std::vector<std::vector<double>> x;
  for (const GameState& s : reachable_states(cfg)) {
    if (s.is_initial()) continue;
    for (Outcome o : {Outcome::kSuccess, Outcome::kFailure}) {
      const auto e = encode_engagement_input(s, o, cfg.num_levels);
      x.emplace_back(e.begin(), e.end());
    }
  }
  return x;
}

// Performance GP trained on targets f(state), engagement GP on g(state, O).
UserModel model_from(const GameConfig& cfg, const std::function<double(const GameState&)>& f,
                     const std::function<double(const GameState&, Outcome)>& g) {
  std::vector<std::vector<double>> xp, xe;
  std::vector<double> yp, ye;
  for (const GameState& s : reachable_states(cfg)) {
    if (s.is_initial()) continue;
    const auto a = encode_performance_input(s, cfg.num_levels);
    xp.emplace_back(a.begin(), a.end());
    yp.push_back(f(s));
    for (Outcome o : {Outcome::kSuccess, Outcome::kFailure}) {
      const auto b = encode_engagement_input(s, o, cfg.num_levels);
      xe.emplace_back(b.begin(), b.end());
      ye.push_back(g(s, o));
    }
  }
  return UserModel(GaussianProcess::fit(xp, yp), GaussianProcess::fit(xe, ye), 1, cfg.num_levels);
}

}  // namespace

TEST_CASE("user vector from logs") {
  const GameConfig cfg;
  std::vector<SessionLog> logs{session("u", {{1, Outcome::kSuccess, 1},
                                             {1, Outcome::kSuccess, 1},
                                             {1, Outcome::kFailure, -1},
                                             {2, Outcome::kSuccess, 1},
                                             {3, Outcome::kFailure, 1}})};
  const UserVector v = build_user_vector(logs, cfg);
  CHECK(v.success[0] == doctest::Approx(2.0 / 3.0));
  CHECK(v.success[1] == 1.0);
  CHECK(v.success[2] == 0.0);
  CHECK(v.engagement[0] == doctest::Approx(1.0 / 3.0));
  CHECK(v.flatten().size() == 6);

  logs = {session("u", {{1, Outcome::kSuccess, 1}, {2, Outcome::kSuccess, 1}, {3, Outcome::kSuccess, 1}})};
  const UserVector all = build_user_vector(logs, cfg);
  CHECK(all.success == std::vector<double>{1, 1, 1});
  CHECK(all.engagement == std::vector<double>{1, 1, 1});

  logs = {session("u", {{1, Outcome::kSuccess, 1}, {2, Outcome::kSuccess, 1}})};
  try {
    build_user_vector(logs, cfg);
    FAIL("expected an error");
  } catch (const InsufficientDataError& e) {
    CHECK(std::string(e.what()).find("level 3") != std::string::npos);
  }
}

TEST_CASE("pca: rank-2 data is reconstructed exactly") {
  Rng rng(4);
  const std::vector<double> u{1, 0, 2, 0, -1, 1}, w{0, 1, 0, -1, 1, 2}, c{0.5, 0.2, 0.1, 0.9, 0.3, 0.4};
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 12; ++i) {
    const double a = rng.normal(), b = rng.normal();
    std::vector<double> r(6);
    for (int d = 0; d < 6; ++d) r[d] = c[d] + a * u[d] + b * w[d];
    rows.push_back(r);
  }
  const PcaResult pca = pca_project(rows);
  const auto& P = pca.projection;
  CHECK(P.eigenvalues[0] + P.eigenvalues[1] == doctest::Approx(P.total_variance).epsilon(1e-10));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int d = 0; d < 6; ++d) {
      const double rec = P.mean[d] + pca.points[i][0] * P.axes[0][d] + pca.points[i][1] * P.axes[1][d];
      CHECK(std::abs(rec - rows[i][d]) < 1e-9);
    }
  }
}

TEST_CASE("pca: identical users collapse to the origin") {
  const std::vector<std::vector<double>> rows(5, std::vector<double>{0.9, 0.8, 0.6, 0.5, 0.5, 0.4});
  const PcaResult pca = pca_project(rows);
  for (const Point2& p : pca.points) {
    CHECK(p[0] == 0.0);
    CHECK(p[1] == 0.0);
  }
}

TEST_CASE("pca: eigenvalues match an independent eigen-solver") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 20; ++i) {
      std::vector<double> r(6);
      for (int d = 0; d < 6; ++d) r[d] = (d + 1) * 0.3 * rng.normal() + (d == 2 ? r[0] : 0.0);
      rows.push_back(r);
    }
    Eigen::MatrixXd X(20, 6);
    for (int i = 0; i < 20; ++i) {
      for (int d = 0; d < 6; ++d) X(i, d) = rows[i][d];
    }
    const Eigen::MatrixXd centered = X.rowwise() - X.colwise().mean();
    const Eigen::MatrixXd cov = centered.transpose() * centered / 19.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    const Eigen::VectorXd ev = solver.eigenvalues();  // ascending

    const PcaResult pca = pca_project(rows);
    CHECK(std::abs(pca.projection.eigenvalues[0] - ev(5)) < 1e-8);
    CHECK(std::abs(pca.projection.eigenvalues[1] - ev(4)) < 1e-8);
    CHECK(pca.projection.eigenvalues[0] + pca.projection.eigenvalues[1] <=
          pca.projection.total_variance + 1e-12);
    for (int k = 0; k < 2; ++k) {
      double dot = 0.0;
      for (int d = 0; d < 6; ++d) dot += pca.projection.axes[k][d] * solver.eigenvectors()(d, 5 - k);
      CHECK(std::abs(std::abs(dot) - 1.0) < 1e-8);
      const auto& axis = pca.projection.axes[k];
      const auto big = std::max_element(axis.begin(), axis.end(),
                                        [](double a, double b) { return std::abs(a) < std::abs(b); });
      CHECK(*big > 0.0);
    }
    const Point2 origin = pca.projection.project(pca.projection.mean);
    CHECK(std::abs(origin[0]) < 1e-12);
    CHECK(std::abs(origin[1]) < 1e-12);
  }
}

TEST_CASE("jacobi eigen on a known matrix") {
  Eigen::MatrixXd m(3, 3);
  m << 2, 1, 0, 1, 2, 0, 0, 0, 5;
  const SymmetricEigen e = jacobi_eigen(m);
  CHECK(e.values(0) == doctest::Approx(5.0));
  CHECK(e.values(1) == doctest::Approx(3.0));
  CHECK(e.values(2) == doctest::Approx(1.0));
  const Eigen::MatrixXd rebuilt = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
  CHECK((rebuilt - m).norm() < 1e-12);
}

TEST_CASE("pca needs three users") {
  const std::vector<std::vector<double>> rows(2, std::vector<double>{1, 2});
  CHECK_THROWS_AS(pca_project(rows), ValidationError);
}

TEST_CASE("kmeans: separated blobs") {
  Rng rng(2);
  std::vector<Point2> pts;
  std::vector<int> truth;
  for (int i = 0; i < 30; ++i) {
    const int g = i % 2;
    pts.push_back({g * 10.0 + 0.5 * (rng.uniform() - 0.5), 0.5 * (rng.uniform() - 0.5)});
    truth.push_back(g);
  }
  const KMeansResult km = kmeans_cluster(pts, 2, 10, rng);
  CHECK(rand_index(km.labels, truth) == 1.0);
  for (std::size_t i = 1; i < km.inertia_history.size(); ++i) {
    CHECK(km.inertia_history[i] <= km.inertia_history[i - 1] + 1e-12);
  }
}

TEST_CASE("kmeans: one cluster per point") {
  Rng rng(6);
  const std::vector<Point2> pts{{0, 0}, {1, 0}, {0, 1}, {3, 3}};
  const KMeansResult km = kmeans_cluster(pts, 4, 3, rng);
  CHECK(km.inertia == 0.0);
  std::vector<int> sorted = km.labels;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("kmeans: inertia never increases over Lloyd steps") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Point2> pts;
    for (int i = 0; i < 25; ++i) pts.push_back({rng.normal(), rng.normal()});
    const KMeansResult km = kmeans_cluster(pts, 3, 4, rng);
    for (std::size_t i = 1; i < km.inertia_history.size(); ++i) {
      CHECK(km.inertia_history[i] <= km.inertia_history[i - 1] + 1e-12);
    }
    CHECK(km.inertia == doctest::Approx(km.inertia_history.back()));
  }
}

TEST_CASE("kmeans validation") {
  Rng rng(1);
  const std::vector<Point2> pts{{0, 0}, {1, 1}};
  CHECK_THROWS_AS(kmeans_cluster(pts, 3, 1, rng), ValidationError);
  CHECK_THROWS_AS(kmeans_cluster(pts, 0, 1, rng), ValidationError);
}

TEST_CASE("rand index") {
  const std::vector<int> a{0, 0, 1, 1}, b{1, 1, 0, 0}, c{0, 1, 0, 1};
  CHECK(rand_index(a, b) == 1.0);
  // pairs: (01)(02)(03)(12)(13)(23); agreements only on (03) and (12)
  CHECK(rand_index(a, c) == doctest::Approx(2.0 / 6.0));
}

TEST_CASE("input encoding lies in the unit cube") {
  const GameConfig cfg;
  for (const auto& x : grid_inputs(cfg)) {
    for (double v : x) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  for (const auto& x : engagement_grid(cfg)) {
    for (double v : x) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  const auto e = encode_engagement_input(GameState{3, Feedback::kChallenging, -3}, Outcome::kSuccess, 3);
  CHECK(e == std::array<double, 4>{1.0, 1.0, 0.0, 1.0});
}

TEST_CASE("performance model predictions") {
  const GameConfig cfg;
  const UserModel level1 = model_from(
      cfg, [](const GameState& s) { return s.level == 1 ? 1.0 : 0.3; },
      [](const GameState&, Outcome) { return 0.0; });
  for (const GameState& s : reachable_states(cfg)) {
    if (s.level == 1) CHECK(level1.predict_success(s) >= 0.9);
  }

  const UserModel half = model_from(
      cfg, [](const GameState&) { return 0.5; }, [](const GameState&, Outcome) { return 0.0; });
  const StateIndexer idx(cfg.num_levels);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const GameState s = idx.state(i);
    if (s.is_initial()) continue;
    CHECK(half.predict_success(s) >= 0.4);
    CHECK(half.predict_success(s) <= 0.6);
  }

  const UserModel over = model_from(
      cfg, [](const GameState&) { return 1.5; }, [](const GameState&, Outcome) { return -1.7; });
  const GameState s{2, Feedback::kNone, 1};
  CHECK(over.performance().mean(std::vector<double>{2.0 / 3, 0.0, 4.0 / 6}) > 1.0);
  CHECK(over.predict_success(s) == 1.0);
  CHECK(over.predict_engagement(s, Outcome::kSuccess) == -1.0);
}

TEST_CASE("engagement model predictions") {
  const GameConfig cfg;
  const UserModel engaged = model_from(
      cfg, [](const GameState&) { return 0.5; }, [](const GameState&, Outcome) { return 1.0; });
  const UserModel leveled = model_from(
      cfg, [](const GameState&) { return 0.5; },
      [](const GameState& s, Outcome) { return 0.5 - 0.3 * s.level; });
  for (const GameState& s : reachable_states(cfg)) {
    if (s.is_initial()) continue;
    for (Outcome o : {Outcome::kSuccess, Outcome::kFailure}) {
      CHECK(engaged.predict_engagement(s, o) >= 0.9);
    }
    CHECK(std::abs(leveled.predict_engagement(s, Outcome::kSuccess) -
                   leveled.predict_engagement(s, Outcome::kFailure)) < 1e-6);
  }
}

TEST_CASE("predictions stay in range over the full grid") {
  const GameConfig cfg;
  Rng rng(90);
  const UserModel noisy = model_from(
      cfg, [&](const GameState&) { return 3.0 * rng.uniform() - 1.0; },
      [&](const GameState&, Outcome) { return 4.0 * rng.uniform() - 2.0; });
  const StateIndexer idx(cfg.num_levels);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const GameState s = idx.state(i);
    if (s.is_initial()) continue;
    const double p = noisy.predict_success(s);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    for (Outcome o : {Outcome::kSuccess, Outcome::kFailure}) {
      const double e = noisy.predict_engagement(s, o);
      CHECK(e >= -1.0);
      CHECK(e <= 1.0);
    }
  }
}

TEST_CASE("fit_user_models on two synthetic archetypes") {
  GameConfig game;
  Rng rng(5);
  const auto specs = default_population();
  const auto logs = generate_population(specs, game, 2, rng);

  UserModelingOptions options;
  Rng fit_rng(9);
  const UserModelFit fit = fit_user_models(logs, game, options, fit_rng);
  REQUIRE(fit.models.size() == 2);
  CHECK(fit.user_ids.size() == 20);
  int sizes[2] = {0, 0};
  for (int id : fit.cluster_ids) ++sizes[id - 1];
  CHECK(sizes[0] + sizes[1] == 20);
  CHECK(sizes[0] >= sizes[1]);

  // the generating engagement profiles differ by level; compare the models
  // on first-sequence states
  auto mean_e = [&](const UserModel& m) {
    double sum = 0;
    for (int l = 1; l <= 3; ++l) {
      sum += m.predict_engagement(GameState{l, Feedback::kNone, 0}, Outcome::kSuccess);
    }
    return sum / 3;
  };
  const auto groups = group_of_users(specs);
  int engaged_cluster = 0;
  for (std::size_t u = 0; u < groups.size(); ++u) {
    if (groups[u] == "engaged") engaged_cluster = fit.cluster_ids[u];
  }
  REQUIRE(engaged_cluster != 0);
  const UserModel& hi = fit.models[static_cast<std::size_t>(engaged_cluster - 1)];
  const UserModel& lo = fit.models[static_cast<std::size_t>(2 - engaged_cluster)];
  CHECK(mean_e(hi) > mean_e(lo) + 0.3);

  options.num_clusters = 1;
  Rng one_rng(9);
  const UserModelFit single = fit_user_models(logs, game, options, one_rng);
  CHECK(single.models.size() == 1);
  for (int id : single.cluster_ids) CHECK(id == 1);
}
