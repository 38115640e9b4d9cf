#include "tvnet/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tvnet/rng.hpp"

namespace tvnet::sim {

namespace {

using json = nlohmann::json;

BlockDiagonal random_blocks(Index p, Index block_size, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    BlockDiagonal b;
    const Index nb = p / block_size;
    b.blocks.reserve(static_cast<std::size_t>(nb));
    for (Index k = 0; k < nb; ++k) {
        Matrix block(block_size, block_size);
        for (Index r = 0; r < block_size; ++r) {
            for (Index c = 0; c < block_size; ++c) {
                block(r, c) = normal(rng);
            }
        }
        b.blocks.push_back(std::move(block));
    }
    return b;
}

double soft_threshold(double a, double level) {
    const double mag = std::max(std::abs(a) - level, 0.0);
    return a < 0.0 ? -mag : mag;
}

struct Position {
    Index block, row, col;
};

// Draws min(k, pool.size()) distinct elements of pool, uniformly.
std::vector<Position> choose(std::vector<Position> pool, std::size_t k, Rng& rng) {
    k = std::min(k, pool.size());
    for (std::size_t a = 0; a < k; ++a) {
        std::uniform_int_distribution<std::size_t> pick(a, pool.size() - 1);
        std::swap(pool[a], pool[pick(rng)]);
    }
    pool.resize(k);
    return pool;
}

void apply_edit(const CoefficientEdit& e, BlockDiagonal& b1) {
    double& v = b1.blocks[static_cast<std::size_t>(e.block)](e.row, e.col);
    if (e.kind == CoefficientEdit::Kind::soft_threshold) {
        v = soft_threshold(v, kSoftThreshold);
    } else {
        v += kIncrement;
    }
}

// Sum over the lag-stationary part: sum_{m>=2} decay(m)^2 B_m B_m^T.
Matrix static_covariance(const SimDesign& d) {
    Matrix s = Matrix::Zero(d.p, d.p);
    for (Index m = 2; m <= d.lag_cap; ++m) {
        const double w = d.decay(m) * d.decay(m);
        const auto& bm = d.base[static_cast<std::size_t>(m - 1)];
        for (std::size_t k = 0; k < bm.blocks.size(); ++k) {
            const Index off = static_cast<Index>(k) * d.block_size;
            s.block(off, off, d.block_size, d.block_size).noalias() +=
                w * bm.blocks[k] * bm.blocks[k].transpose();
        }
    }
    return s;
}

Matrix covariance_at(const SimDesign& d, Index i, bool jump) {
    Matrix s = static_covariance(d);
    const BlockDiagonal b1 = d.b1_at(i);
    const double w1 = d.decay(1) * d.decay(1);
    for (std::size_t k = 0; k < b1.blocks.size(); ++k) {
        const Index off = static_cast<Index>(k) * d.block_size;
        s.block(off, off, d.block_size, d.block_size).noalias() +=
            w1 * b1.blocks[k] * b1.blocks[k].transpose();
    }
    if (jump) {
        s.noalias() += d.alpha.squaredNorm() * d.alpha * d.alpha.transpose();
    }
    return 0.5 * (s + s.transpose());
}

void check_index(const SimDesign& d, Index i) {
    if (i < 1 || i > d.n) {
        throw InvalidArgument("time index " + std::to_string(i) + " outside [1, " +
                              std::to_string(d.n) + "]");
    }
}

}  // namespace

Matrix BlockDiagonal::dense() const {
    Index p = 0;
    for (const auto& b : blocks) p += b.rows();
    Matrix out = Matrix::Zero(p, p);
    Index off = 0;
    for (const auto& b : blocks) {
        out.block(off, off, b.rows(), b.cols()) = b;
        off += b.rows();
    }
    return out;
}

void BlockDiagonal::apply_add(const Eigen::Ref<const Vector>& x, double scale,
                              Eigen::Ref<Vector> y) const {
    Index off = 0;
    for (const auto& b : blocks) {
        const Index bs = b.rows();
        y.segment(off, bs).noalias() += scale * (b * x.segment(off, bs));
        off += bs;
    }
}

double SimDesign::decay(Index m) const {
    return std::pow(1.0 + static_cast<double>(m), -beta);
}

BlockDiagonal SimDesign::b1_at(Index i) const {
    BlockDiagonal b1 = base.front();
    for (const auto& e : edits) {
        if (e.step > i) break;
        apply_edit(e, b1);
    }
    return b1;
}

Matrix SimDesign::coefficient(Index m, Index i) const {
    check_index(*this, i);
    if (m < 0 || m > lag_cap) {
        throw InvalidArgument("lag " + std::to_string(m) + " outside [0, lag_cap]");
    }
    if (m == 0) {
        return jump_active(i) ? Matrix(alpha * alpha.transpose()) : Matrix::Zero(p, p);
    }
    const Matrix b = m == 1 ? b1_at(i).dense() : base[static_cast<std::size_t>(m - 1)].dense();
    return decay(m) * b;
}

void apply_edits(const SimDesign& design, Index step, BlockDiagonal& b1) {
    auto it = std::lower_bound(design.edits.begin(), design.edits.end(), step,
                               [](const CoefficientEdit& e, Index s) { return e.step < s; });
    for (; it != design.edits.end() && it->step == step; ++it) {
        apply_edit(*it, b1);
    }
}

SimDesign build_sim_design(Index n, Index p, double delta0, std::uint64_t seed) {
    if (n < 100) {
        throw InvalidArgument("n must be at least 100 so change points stay away from the edges, got " +
                              std::to_string(n));
    }
    if (p <= 0 || p % kDefaultBlockSize != 0) {
        throw InvalidArgument("p must be a positive multiple of the block size " +
                              std::to_string(kDefaultBlockSize) + ", got " + std::to_string(p));
    }
    if (p < kJumpSupport) {
        throw InvalidArgument("p must be at least " + std::to_string(kJumpSupport) +
                              " to hold the jump vector, got " + std::to_string(p));
    }
    if (!(delta0 > 0.0) || !std::isfinite(delta0)) {
        throw InvalidArgument("delta0 must be positive and finite");
    }

    SimDesign d;
    d.n = n;
    d.p = p;
    d.delta0 = delta0;
    d.seed = seed;
    d.change_points = {static_cast<Index>(std::lround(0.3 * static_cast<double>(n))),
                       static_cast<Index>(std::lround(0.65 * static_cast<double>(n)))};
    d.alpha = Vector::Zero(p);
    d.alpha.head(kJumpSupport).setConstant(delta0);

    Rng rng = make_stream(seed, "design");
    d.base.reserve(static_cast<std::size_t>(d.lag_cap));
    for (Index m = 1; m <= d.lag_cap; ++m) {
        d.base.push_back(random_blocks(p, d.block_size, rng));
    }

    // Replay the A_1 evolution to draw edit positions from the live support.
    BlockDiagonal b1 = d.base.front();
    const Index nb = p / d.block_size;
    std::vector<Position> all_positions;
    all_positions.reserve(static_cast<std::size_t>(nb * d.block_size * d.block_size));
    for (Index k = 0; k < nb; ++k)
        for (Index r = 0; r < d.block_size; ++r)
            for (Index c = 0; c < d.block_size; ++c) all_positions.push_back({k, r, c});

    d.edits.reserve(static_cast<std::size_t>(4 * (n - 1)));
    for (Index i = 2; i <= n; ++i) {
        std::vector<Position> support;
        for (const auto& pos : all_positions) {
            if (b1.blocks[static_cast<std::size_t>(pos.block)](pos.row, pos.col) != 0.0) {
                support.push_back(pos);
            }
        }
        for (const auto& pos : choose(std::move(support), 2, rng)) {
            CoefficientEdit e{i, CoefficientEdit::Kind::soft_threshold, pos.block, pos.row, pos.col};
            apply_edit(e, b1);
            d.edits.push_back(e);
        }
        for (const auto& pos : choose(all_positions, 2, rng)) {
            CoefficientEdit e{i, CoefficientEdit::Kind::increase, pos.block, pos.row, pos.col};
            apply_edit(e, b1);
            d.edits.push_back(e);
        }
    }
    return d;
}

Matrix standardized_t_innovations(int df, Index rows, Index cols, std::uint64_t seed) {
    if (df <= 2) {
        throw InvalidArgument("Student-t degrees of freedom must exceed 2 for finite variance, got " +
                              std::to_string(df));
    }
    if (rows < 0 || cols < 0) throw InvalidArgument("negative innovation shape");
    Rng rng(seed);
    std::student_t_distribution<double> t(static_cast<double>(df));
    const double scale = std::sqrt(static_cast<double>(df - 2) / static_cast<double>(df));
    Matrix out(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
            out(r, c) = scale * t(rng);
        }
    }
    return out;
}

TimeSeriesPanel simulate_panel(const SimDesign& d) {
    const Index lag = d.lag_cap;
    // Row k holds eps_{k - lag + 1}; eps_{1-lag}..eps_0 are the burn-in.
    const Matrix eps = standardized_t_innovations(d.df, d.n + lag, d.p, stream_seed(d.seed, "panel"));
    auto innovation = [&](Index k) -> Vector { return eps.row(k + lag - 1).transpose(); };

    std::vector<double> decays(static_cast<std::size_t>(lag + 1));
    for (Index m = 0; m <= lag; ++m) decays[static_cast<std::size_t>(m)] = d.decay(m);

    BlockDiagonal b1 = d.base.front();
    Matrix x(d.n, d.p);
    Vector xi(d.p);
    for (Index i = 1; i <= d.n; ++i) {
        if (i >= 2) apply_edits(d, i, b1);
        xi.setZero();
        for (Index m = lag; m >= 2; --m) {
            d.base[static_cast<std::size_t>(m - 1)].apply_add(innovation(i - m),
                                                              decays[static_cast<std::size_t>(m)], xi);
        }
        b1.apply_add(innovation(i - 1), decays[1], xi);
        if (d.jump_active(i)) {
            const Vector e0 = innovation(i);
            xi.noalias() += d.alpha.dot(e0) * d.alpha;
        }
        x.row(i - 1) = xi.transpose();
    }
    return TimeSeriesPanel(std::move(x));
}

CovarianceSnapshot true_covariance(const SimDesign& d, Index i) {
    check_index(d, i);
    return {covariance_at(d, i, d.jump_active(i)), static_cast<double>(i) / static_cast<double>(d.n),
            CovarianceSource::truth};
}

CovarianceSnapshot true_covariance_left_limit(const SimDesign& d, Index i) {
    check_index(d, i);
    const bool jump = i >= 2 ? d.jump_active(i - 1) : d.jump_active(i);
    return {covariance_at(d, i, jump), static_cast<double>(i) / static_cast<double>(d.n),
            CovarianceSource::truth};
}

Matrix checked_inverse(const Matrix& sigma) {
    if (sigma.rows() != sigma.cols() || sigma.rows() == 0) {
        throw InvalidArgument("covariance must be a non-empty square matrix");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e12) {
        throw NumericalError("covariance is singular or ill-conditioned (eigenvalues in [" +
                             std::to_string(lo) + ", " + std::to_string(hi) + "])");
    }
    const Eigen::LLT<Matrix> llt(sigma);
    Matrix inv = llt.solve(Matrix::Identity(sigma.rows(), sigma.cols()));
    return 0.5 * (inv + inv.transpose());
}

GraphEstimate graph_from_covariance(const Matrix& sigma, double t, double u) {
    const Matrix omega = checked_inverse(sigma);
    return {(omega.array().abs() > u).matrix(), t, u};
}

GraphEstimate true_graph(const SimDesign& d, Index i, double u) {
    const auto snap = true_covariance(d, i);
    return graph_from_covariance(snap.matrix, snap.t, u);
}

double evolution_step_bound(const SimDesign& d, Index i) {
    check_index(d, i);
    if (i == d.n) return 0.0;
    const Matrix a = d.decay(1) * d.b1_at(i).dense();
    const Matrix a_next = d.decay(1) * d.b1_at(i + 1).dense();
    const Matrix e = a_next - a;
    const double row_l1 = e.cwiseAbs().rowwise().sum().maxCoeff();
    return 2.0 * max_abs(a) * row_l1 + max_abs(e) * row_l1;
}

json to_json(const SimDesign& d) {
    json j;
    j["n"] = d.n;
    j["p"] = d.p;
    j["lag_cap"] = d.lag_cap;
    j["beta"] = d.beta;
    j["block_size"] = d.block_size;
    j["delta0"] = d.delta0;
    j["df"] = d.df;
    j["seed"] = d.seed;
    j["change_points"] = {d.change_points[0], d.change_points[1]};
    j["alpha"] = std::vector<double>(d.alpha.data(), d.alpha.data() + d.alpha.size());
    json base = json::array();
    for (const auto& bm : d.base) {
        json blocks = json::array();
        for (const auto& b : bm.blocks) {
            std::vector<double> flat;
            flat.reserve(static_cast<std::size_t>(b.size()));
            for (Index r = 0; r < b.rows(); ++r)
                for (Index c = 0; c < b.cols(); ++c) flat.push_back(b(r, c));
            blocks.push_back(std::move(flat));
        }
        base.push_back(std::move(blocks));
    }
    j["base_blocks"] = std::move(base);
    json edits = json::array();
    for (const auto& e : d.edits) {
        edits.push_back({e.step, e.kind == CoefficientEdit::Kind::soft_threshold ? "soft" : "inc",
                         e.block, e.row, e.col});
    }
    j["a1_edits"] = std::move(edits);
    return j;
}

SimDesign design_from_json(const json& j) {
    try {
        SimDesign d;
        d.n = j.at("n").get<Index>();
        d.p = j.at("p").get<Index>();
        d.lag_cap = j.at("lag_cap").get<Index>();
        d.beta = j.at("beta").get<double>();
        d.block_size = j.at("block_size").get<Index>();
        d.delta0 = j.at("delta0").get<double>();
        d.df = j.at("df").get<int>();
        d.seed = j.at("seed").get<std::uint64_t>();
        const auto cps = j.at("change_points").get<std::vector<Index>>();
        if (cps.size() != 2) throw InvalidArgument("design needs exactly two change points");
        d.change_points = {cps[0], cps[1]};
        const auto alpha = j.at("alpha").get<std::vector<double>>();
        d.alpha = Eigen::Map<const Vector>(alpha.data(), static_cast<Index>(alpha.size()));
        for (const auto& lag : j.at("base_blocks")) {
            BlockDiagonal bm;
            for (const auto& flat : lag) {
                const auto v = flat.get<std::vector<double>>();
                if (static_cast<Index>(v.size()) != d.block_size * d.block_size) {
                    throw InvalidArgument("block has wrong size");
                }
                Matrix b(d.block_size, d.block_size);
                for (Index r = 0; r < d.block_size; ++r)
                    for (Index c = 0; c < d.block_size; ++c)
                        b(r, c) = v[static_cast<std::size_t>(r * d.block_size + c)];
                bm.blocks.push_back(std::move(b));
            }
            d.base.push_back(std::move(bm));
        }
        for (const auto& e : j.at("a1_edits")) {
            const auto kind = e.at(1).get<std::string>();
            d.edits.push_back({e.at(0).get<Index>(),
                               kind == "soft" ? CoefficientEdit::Kind::soft_threshold
                                              : CoefficientEdit::Kind::increase,
                               e.at(2).get<Index>(), e.at(3).get<Index>(), e.at(4).get<Index>()});
        }
        if (static_cast<Index>(d.base.size()) != d.lag_cap || d.alpha.size() != d.p ||
            d.p % d.block_size != 0 || d.n < 2) {
            throw InvalidArgument("design JSON is internally inconsistent");
        }
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed design JSON: ") + e.what());
    }
}

}  // namespace tvnet::sim
