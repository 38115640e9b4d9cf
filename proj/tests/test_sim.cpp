#include <cmath>
#include <string>

#include "doctest.h"

#include "tvnet/sim.hpp"

using namespace tvnet;

namespace {

double min_eigenvalue(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("design places change points and the jump vector") {
    const auto d = sim::build_sim_design(1000, 50, 1.0, 7);
    CHECK(d.change_points[0] == 300);
    CHECK(d.change_points[1] == 650);
    CHECK(d.alpha.squaredNorm() == doctest::Approx(20.0).epsilon(1e-14));
    CHECK((d.alpha.head(20).array() == 1.0).all());
    CHECK((d.alpha.tail(30).array() == 0.0).all());

    CHECK(max_abs(d.coefficient(0, 299)) == 0.0);
    CHECK(max_abs(d.coefficient(0, 300) - d.alpha * d.alpha.transpose()) == 0.0);
    CHECK(max_abs(d.coefficient(0, 649)) > 0.0);
    CHECK(max_abs(d.coefficient(0, 650)) == 0.0);

    const auto small = sim::build_sim_design(200, 20, 1.0, 1);
    CHECK(small.change_points[0] == 60);
    CHECK(small.change_points[1] == 130);
}

TEST_CASE("design preconditions") {
    try {
        sim::build_sim_design(1000, 47, 1.0, 0);
        FAIL("p=47 accepted");
    } catch (const InvalidArgument& e) {
        CHECK(std::string(e.what()).find("block") != std::string::npos);
    }
    CHECK_THROWS_AS(sim::build_sim_design(1000, 50, 0.0, 0), InvalidArgument);
    CHECK_THROWS_AS(sim::build_sim_design(1000, 15, 1.0, 0), InvalidArgument);
    CHECK_THROWS_AS(sim::build_sim_design(50, 50, 1.0, 0), InvalidArgument);
}

TEST_CASE("coefficient evolution only touches B_1 within its blocks") {
    const auto d = sim::build_sim_design(400, 20, 1.0, 3);
    const Matrix b1_first = d.b1_at(1).dense();
    const Matrix b1_last = d.b1_at(400).dense();
    CHECK(max_abs(b1_first - b1_last) > 0.0);
    for (Index r = 0; r < 20; ++r)
        for (Index c = 0; c < 20; ++c)
            if (r / 5 != c / 5) CHECK(b1_last(r, c) == 0.0);
    CHECK(max_abs(d.coefficient(2, 1) - d.coefficient(2, 400)) == 0.0);
    CHECK(d.coefficient(3, 10).isApprox(d.base[2].dense() * std::pow(4.0, -d.beta)));

    // At most two soft-threshold and two increase edits per step.
    for (Index i = 2; i <= 400; ++i) {
        int soft = 0, inc = 0;
        for (const auto& e : d.edits) {
            if (e.step != i) continue;
            (e.kind == sim::CoefficientEdit::Kind::soft_threshold ? soft : inc) += 1;
        }
        CHECK(soft <= 2);
        CHECK(inc == 2);
    }
}

TEST_CASE("standardized t innovations") {
    CHECK(std::sqrt(6.0 / 8.0) == doctest::Approx(0.8660).epsilon(1e-4));
    const Matrix z = sim::standardized_t_innovations(8, 1000, 1000, 11);
    const double mean = z.mean();
    const double var = (z.array() - mean).square().sum() / static_cast<double>(z.size() - 1);
    CHECK(var >= 0.99);
    CHECK(var <= 1.01);
    CHECK(std::abs(mean) < 0.005);
    CHECK_THROWS_AS(sim::standardized_t_innovations(2, 10, 10, 0), InvalidArgument);
    CHECK(sim::standardized_t_innovations(8, 5, 5, 4) == sim::standardized_t_innovations(8, 5, 5, 4));
}

TEST_CASE("panel shape and determinism") {
    const auto d = sim::build_sim_design(1000, 50, 1.0, 5);
    const auto a = sim::simulate_panel(d);
    const auto b = sim::simulate_panel(sim::build_sim_design(1000, 50, 1.0, 5));
    CHECK(a.n() == 1000);
    CHECK(a.p() == 50);
    CHECK(a.data().allFinite());
    CHECK(a.data() == b.data());
    CHECK(a.data() != sim::simulate_panel(sim::build_sim_design(1000, 50, 1.0, 6)).data());
}

TEST_CASE("covariance jump equals |alpha|^2 alpha alpha^T") {
    for (double delta0 : {1.0, 2.0}) {
        const auto d = sim::build_sim_design(1000, 50, delta0, 21);
        const double target = 20.0 * std::pow(delta0, 4);
        for (Index c : d.change_points) {
            const Matrix jump = sim::true_covariance(d, c).matrix - sim::true_covariance_left_limit(d, c).matrix;
            CHECK(std::abs(max_abs(jump) - target) <= 1e-10);
            const Matrix rank_one = d.alpha.squaredNorm() * d.alpha * d.alpha.transpose();
            CHECK(max_abs(jump.cwiseAbs() - rank_one) <= 1e-10);
            // The full step change includes the smooth A_1 edit and is at least as large.
            const Matrix step = sim::true_covariance(d, c).matrix - sim::true_covariance(d, c - 1).matrix;
            CHECK(max_abs(step) >= target - sim::evolution_step_bound(d, c - 1));
        }
    }
}

TEST_CASE("true covariance is symmetric PSD and evolves within the closed-form bound") {
    const auto d = sim::build_sim_design(1000, 50, 1.0, 9);
    Matrix prev = sim::true_covariance(d, 1).matrix;
    for (Index i = 2; i <= 1000; ++i) {
        const Matrix cur = sim::true_covariance(d, i).matrix;
        if (i % 97 == 0 || i == 300 || i == 650) {
            CHECK(cur == cur.transpose());
            CHECK(min_eigenvalue(cur) >= -1e-10);
        }
        if (i != 300 && i != 650) {
            CHECK(max_abs(cur - prev) <= sim::evolution_step_bound(d, i - 1) + 1e-12);
        } else {
            CHECK(max_abs(cur - prev) >= 20.0 - sim::evolution_step_bound(d, i - 1));
        }
        prev = cur;
    }
}

TEST_CASE("sample covariance of a frozen design converges to the truth") {
    auto d = sim::build_sim_design(100, 20, 1.0, 13);
    d.edits.clear();
    d.alpha.setZero();
    const Matrix truth = sim::true_covariance(d, 1).matrix;
    double previous = 1e300;
    for (Index n : {2000, 32000}) {
        auto dn = d;
        dn.n = n;
        dn.change_points = {n + 1, n + 1};
        const auto panel = sim::simulate_panel(dn);
        const Matrix sample = panel.data().transpose() * panel.data() / static_cast<double>(n);
        const double err = max_abs(sample - truth);
        CHECK(err < previous);
        previous = err;
    }
    CHECK(previous < 0.1 * max_abs(truth));
}

TEST_CASE("true graph from a covariance matrix") {
    Matrix s(2, 2);
    s << 1.0, 0.5, 0.5, 1.0;
    const Matrix omega = sim::checked_inverse(s);
    CHECK(omega(0, 1) == doctest::Approx(-0.5 / 0.75));
    const auto g = sim::graph_from_covariance(s, 0.3, 0.1);
    CHECK(g.adjacency(0, 1));
    CHECK(g.adjacency(1, 0));

    const Matrix diag = Vector::LinSpaced(4, 1.0, 4.0).asDiagonal();
    const auto gd = sim::graph_from_covariance(diag, 0.0, 0.0);
    CHECK(gd.adjacency == BoolMatrix(BoolMatrix::Identity(4, 4)));
    const auto empty = sim::graph_from_covariance(diag, 0.0, std::numeric_limits<double>::infinity());
    CHECK(!empty.adjacency.any());

    Matrix singular(2, 2);
    singular << 1.0, 1.0, 1.0, 1.0;
    CHECK_THROWS_AS(sim::checked_inverse(singular), NumericalError);

    const auto d = sim::build_sim_design(200, 20, 1.0, 2);
    const auto tg = sim::true_graph(d, 100, 1e-8);
    CHECK(tg.adjacency == tg.adjacency.transpose());
    CHECK(tg.adjacency.diagonal().all());
}

TEST_CASE("design JSON round trip replays the same panel") {
    const auto d = sim::build_sim_design(300, 20, 1.5, 17);
    const auto back = sim::design_from_json(sim::to_json(d));
    CHECK(sim::to_json(back) == sim::to_json(d));
    CHECK(sim::simulate_panel(back).data() == sim::simulate_panel(d).data());
    CHECK_THROWS_AS(sim::design_from_json(nlohmann::json::object()), InvalidArgument);
}
