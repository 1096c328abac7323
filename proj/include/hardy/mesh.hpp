#ifndef HARDY_MESH_HPP
#define HARDY_MESH_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace hardy {

/// One-dimensional mesh of [0,1]: strictly increasing nodes x_0 = 0 < ... < x_N = 1.
///
/// Immutable after construction; safe to share across threads.
class Mesh1D {
public:
    /// Validates the node sequence. `quasi_uniformity` is the smallest admissible
    /// ratio min(h_T)/max(h_T); 1 accepts only uniform meshes.
    explicit Mesh1D(std::vector<double> nodes, double quasi_uniformity = 1.0)
        : nodes_(std::move(nodes)) {
        if (nodes_.size() < 2)
            throw std::invalid_argument("Mesh1D: need at least two nodes");
        if (nodes_.front() != 0.0 || nodes_.back() != 1.0)
            throw std::invalid_argument("Mesh1D: nodes must span [0,1] exactly");
        if (!(quasi_uniformity > 0.0) || quasi_uniformity > 1.0)
            throw std::invalid_argument("Mesh1D: quasi-uniformity constant must lie in (0,1]");
        sizes_.reserve(nodes_.size() - 1);
        double hmin = 2.0, hmax = 0.0;
        for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
            const double dx = nodes_[i + 1] - nodes_[i];
            if (!(dx > 0.0))
                throw std::invalid_argument("Mesh1D: nodes must be strictly increasing");
            sizes_.push_back(dx);
            hmin = std::min(hmin, dx);
            hmax = std::max(hmax, dx);
        }
        h_ = hmax;
        // tiny slack so uniform meshes built from k/N pass the c = 1 check
        if (hmin / hmax < quasi_uniformity * (1.0 - 1e-12))
            throw std::invalid_argument("Mesh1D: mesh violates quasi-uniformity bound");
    }

    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& element_sizes() const { return sizes_; }
    double h() const { return h_; }

    /// Number of elements (= number of nodes - 1).
    std::size_t element_count() const { return sizes_.size(); }
    std::size_t node_count() const { return nodes_.size(); }

private:
    std::vector<double> nodes_;
    std::vector<double> sizes_;
    double h_ = 0.0;
};

/// Uniform mesh with nodes x_k = k/N; h = 1/N.
inline Mesh1D uniform_mesh(std::size_t elements) {
    if (elements == 0)
        throw std::invalid_argument("uniform_mesh: N must be positive");
    std::vector<double> nodes(elements + 1);
    for (std::size_t k = 0; k <= elements; ++k)
        nodes[k] = static_cast<double>(k) / static_cast<double>(elements);
    nodes.back() = 1.0;
    return Mesh1D(std::move(nodes));
}

/// Bisects every element at its midpoint. The input nodes are a subset of the
/// output nodes, so the coarse FE space is nested in the refined one; exact
/// midpoint bisection preserves the quasi-uniformity ratio.
inline Mesh1D nested_refine(const Mesh1D& mesh) {
    const auto& x = mesh.nodes();
    std::vector<double> nodes;
    nodes.reserve(2 * x.size() - 1);
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        nodes.push_back(x[i]);
        nodes.push_back(0.5 * (x[i] + x[i + 1]));
    }
    nodes.push_back(x.back());
    const auto& s = mesh.element_sizes();
    double hmin = s.front(), hmax = s.front();
    for (double v : s) { hmin = std::min(hmin, v); hmax = std::max(hmax, v); }
    return Mesh1D(std::move(nodes), hmin / hmax);
}

} // namespace hardy

#endif
