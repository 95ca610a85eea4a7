#include "nfl/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace nfl {

namespace {

void check_same_dim(int a, int b) {
    if (a != b) throw std::invalid_argument("dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
}

}  // namespace

HyperRectangle::HyperRectangle(Eigen::VectorXd lo_, Eigen::VectorXd hi_)
    : lo(std::move(lo_)), hi(std::move(hi_)) {
    if (lo.size() != hi.size()) throw std::invalid_argument("HyperRectangle: lo/hi size mismatch");
    for (int i = 0; i < lo.size(); ++i) {
        if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]))
            throw std::invalid_argument("HyperRectangle: non-finite bound at dim " + std::to_string(i));
        if (lo[i] > hi[i])
            throw std::invalid_argument("HyperRectangle: lo > hi at dim " + std::to_string(i));
    }
}

HyperRectangle HyperRectangle::from_center_radius(const Eigen::VectorXd& center,
                                                  const Eigen::VectorXd& radius) {
    check_same_dim(static_cast<int>(center.size()), static_cast<int>(radius.size()));
    return HyperRectangle(center - radius, center + radius);
}

std::vector<HyperRectangle> partition(const HyperRectangle& rect, const Eigen::VectorXi& r) {
    const int n = rect.dim();
    check_same_dim(n, static_cast<int>(r.size()));
    long total = 1;
    for (int k = 0; k < n; ++k) {
        if (r[k] < 1) throw std::invalid_argument("partition: r must be >= 1 in every dimension");
        total *= r[k];
    }

    // Per-dimension edges; edge[0] and edge[r] are the exact input faces so
    // the cells tile rect with no round-off gaps.
    std::vector<std::vector<double>> edges(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) {
        auto& e = edges[static_cast<size_t>(k)];
        e.resize(static_cast<size_t>(r[k]) + 1);
        const double w = rect.hi[k] - rect.lo[k];
        for (int j = 0; j <= r[k]; ++j) e[static_cast<size_t>(j)] = rect.lo[k] + w * j / r[k];
        e.front() = rect.lo[k];
        e.back() = rect.hi[k];
    }

    std::vector<HyperRectangle> cells;
    cells.reserve(static_cast<size_t>(total));
    Eigen::VectorXi idx = Eigen::VectorXi::Zero(n);
    for (long c = 0; c < total; ++c) {
        Eigen::VectorXd lo(n), hi(n);
        for (int k = 0; k < n; ++k) {
            lo[k] = edges[static_cast<size_t>(k)][static_cast<size_t>(idx[k])];
            hi[k] = edges[static_cast<size_t>(k)][static_cast<size_t>(idx[k]) + 1];
        }
        cells.emplace_back(std::move(lo), std::move(hi));
        for (int k = n - 1; k >= 0; --k) {
            if (++idx[k] < r[k]) break;
            idx[k] = 0;
        }
    }
    return cells;
}

std::optional<HyperRectangle> bound_with_rectangle(const RectUnion& u) {
    if (u.empty()) return std::nullopt;
    Eigen::VectorXd lo = u.members.front().lo;
    Eigen::VectorXd hi = u.members.front().hi;
    for (size_t i = 1; i < u.members.size(); ++i) {
        check_same_dim(static_cast<int>(lo.size()), u.members[i].dim());
        lo = lo.cwiseMin(u.members[i].lo);
        hi = hi.cwiseMax(u.members[i].hi);
    }
    return HyperRectangle(std::move(lo), std::move(hi));
}

bool intersects(const HyperRectangle& a, const HyperRectangle& b) {
    check_same_dim(a.dim(), b.dim());
    for (int k = 0; k < a.dim(); ++k) {
        if (a.lo[k] > b.hi[k] || b.lo[k] > a.hi[k]) return false;
    }
    return true;
}

bool union_intersects(const RectUnion& u, const HyperRectangle& b) {
    for (const auto& m : u.members) {
        if (intersects(m, b)) return true;
    }
    return false;
}

double volume(const HyperRectangle& rect) {
    double v = 1.0;
    for (int k = 0; k < rect.dim(); ++k) v *= rect.hi[k] - rect.lo[k];
    return v;
}

bool contains(const HyperRectangle& rect, const Eigen::VectorXd& x, double tol) {
    check_same_dim(rect.dim(), static_cast<int>(x.size()));
    for (int k = 0; k < rect.dim(); ++k) {
        if (x[k] < rect.lo[k] - tol || x[k] > rect.hi[k] + tol) return false;
    }
    return true;
}

bool union_contains(const RectUnion& u, const Eigen::VectorXd& x, double tol) {
    for (const auto& m : u.members) {
        if (contains(m, x, tol)) return true;
    }
    return false;
}

std::optional<HyperRectangle> intersection(const HyperRectangle& a, const HyperRectangle& b) {
    if (!intersects(a, b)) return std::nullopt;
    return HyperRectangle(a.lo.cwiseMax(b.lo), a.hi.cwiseMin(b.hi));
}

HyperRectangle widened(const HyperRectangle& rect, double eps) {
    return HyperRectangle(rect.lo.array() - eps, rect.hi.array() + eps);
}

void to_json(nlohmann::json& j, const HyperRectangle& rect) {
    j = nlohmann::json{{"lo", std::vector<double>(rect.lo.begin(), rect.lo.end())},
                       {"hi", std::vector<double>(rect.hi.begin(), rect.hi.end())}};
}

void from_json(const nlohmann::json& j, HyperRectangle& rect) {
    auto lo = j.at("lo").get<std::vector<double>>();
    auto hi = j.at("hi").get<std::vector<double>>();
    rect = HyperRectangle(Eigen::Map<Eigen::VectorXd>(lo.data(), static_cast<long>(lo.size())),
                          Eigen::Map<Eigen::VectorXd>(hi.data(), static_cast<long>(hi.size())));
}

void to_json(nlohmann::json& j, const RectUnion& u) {
    j = nlohmann::json::array();
    for (const auto& m : u.members) j.push_back(m);
}

void from_json(const nlohmann::json& j, RectUnion& u) {
    u.members.clear();
    for (const auto& item : j) u.members.push_back(item.get<HyperRectangle>());
}

}  // namespace nfl
