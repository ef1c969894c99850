#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hjbsl {

template <int Dim>
using Point = Eigen::Matrix<double, Dim, 1>;

/// Raised for points that cannot be mapped onto the mesh hull.
class OutOfDomain : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by mesh validation and by the mesh reader.
class MeshError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class DomainShape { box, disk, polygon };

/// Open, bounded, convex domain. A box is an interval in 1D and a rectangle
/// in 2D; disks and convex polygons only exist for Dim == 2.
template <int Dim>
class Domain {
public:
    static Domain box(const Point<Dim>& lo, const Point<Dim>& hi);
    static Domain disk(const Point<Dim>& center, double radius)
        requires(Dim == 2);
    /// Vertices in counter-clockwise order.
    static Domain convex_polygon(std::vector<Point<Dim>> vertices)
        requires(Dim == 2);

    DomainShape shape() const { return shape_; }
    const Point<Dim>& lo() const { return lo_; }
    const Point<Dim>& hi() const { return hi_; }
    const Point<Dim>& center() const { return center_; }
    double radius() const { return radius_; }
    const std::vector<Point<Dim>>& vertices() const { return vertices_; }

    /// Strict membership in the open set.
    bool inside(const Point<Dim>& x) const { return signed_distance(x) < 0.0; }
    /// Negative inside, zero on the boundary, positive outside.
    double signed_distance(const Point<Dim>& x) const;
    /// Nearest boundary point.
    Point<Dim> project_boundary(const Point<Dim>& x) const;
    double diameter() const;
    /// Axis-aligned bounding box of the closure.
    std::pair<Point<Dim>, Point<Dim>> bounds() const { return {lo_, hi_}; }
    /// Tolerance used to classify points as lying on the boundary.
    double boundary_tolerance() const { return 1e-10 * diameter(); }

private:
    DomainShape shape_ = DomainShape::box;
    Point<Dim> lo_ = Point<Dim>::Zero();
    Point<Dim> hi_ = Point<Dim>::Ones();
    Point<Dim> center_ = Point<Dim>::Zero();
    double radius_ = 0.0;
    std::vector<Point<Dim>> vertices_;
};

/// Element containing a query point, after projection onto the mesh hull.
template <int Dim>
struct ElementHit {
    int element = -1;
    Eigen::Matrix<double, Dim + 1, 1> barycentric;
    Point<Dim> projected;
};

/// Uniform lattice description kept by meshes built with build_rect_grid,
/// enabling constant-time location.
template <int Dim>
struct LatticeInfo {
    Point<Dim> lo;
    Point<Dim> spacing;
    std::array<int, Dim> cells;
};

/// Conforming simplicial mesh with boundary-flagged vertices.
template <int Dim>
class Mesh {
public:
    using Element = std::array<int, Dim + 1>;

    Mesh(Domain<Dim> domain, std::vector<Point<Dim>> vertices,
         std::vector<std::uint8_t> boundary, std::vector<Element> elements,
         std::optional<LatticeInfo<Dim>> lattice = std::nullopt);

    const Domain<Dim>& domain() const { return domain_; }
    const std::vector<Point<Dim>>& vertices() const { return vertices_; }
    const Point<Dim>& vertex(int i) const { return vertices_[i]; }
    bool is_boundary(int i) const { return boundary_[i] != 0; }
    const std::vector<std::uint8_t>& boundary_flags() const { return boundary_; }
    const std::vector<Element>& elements() const { return elements_; }
    const std::vector<int>& interior_nodes() const { return interior_; }
    int num_vertices() const { return static_cast<int>(vertices_.size()); }
    int num_elements() const { return static_cast<int>(elements_.size()); }
    /// Maximum element diameter.
    double mesh_size() const { return h_; }
    /// Regularity constant: every element contains a ball of radius
    /// delta*h and fits in one of radius h/delta.
    double regularity() const { return delta_; }
    const std::optional<LatticeInfo<Dim>>& lattice() const { return lattice_; }

    /// Containing element of x, or of its nearest-point projection onto the
    /// polyhedral hull when x lies in closure(Omega) outside the hull.
    ElementHit<Dim> locate(const Point<Dim>& x) const;

    /// Barycentric coordinates of x with respect to element e (unclamped).
    Eigen::Matrix<double, Dim + 1, 1> barycentric(int e, const Point<Dim>& x) const;

private:
    void validate() const;
    void build_locator();
    ElementHit<Dim> locate_lattice(const Point<Dim>& x) const;
    ElementHit<Dim> locate_buckets(const Point<Dim>& x) const;
    int bucket_index(const std::array<int, Dim>& cell) const;
    std::array<int, Dim> bucket_cell(const Point<Dim>& x) const;

    Domain<Dim> domain_;
    std::vector<Point<Dim>> vertices_;
    std::vector<std::uint8_t> boundary_;
    std::vector<Element> elements_;
    std::vector<int> interior_;
    std::optional<LatticeInfo<Dim>> lattice_;
    double h_ = 0.0;
    double delta_ = 0.0;

    // Affine maps x -> local coordinates, one per element.
    std::vector<Eigen::Matrix<double, Dim, Dim>> inverse_jacobian_;

    // Background bucket grid: bucket_start_[b]..bucket_start_[b+1] indexes
    // into bucket_elements_.
    Point<Dim> bucket_lo_;
    double bucket_size_ = 1.0;
    std::array<int, Dim> bucket_counts_{};
    std::vector<int> bucket_start_;
    std::vector<int> bucket_elements_;
};

/// Uniform grid on a box. Each 2D cell is split along its (i,j)-(i+1,j+1)
/// diagonal.
Mesh<2> build_rect_grid(const Point<2>& lo, const Point<2>& hi, int nx, int ny);
Mesh<1> build_interval_mesh(double lo, double hi, int n);

/// Polar-structured triangulation of a disk centred at the origin.
Mesh<2> build_disk_mesh(double radius, double target_h);

template <int Dim>
void save_mesh(std::ostream& out, const Mesh<Dim>& mesh);

/// Reads the text mesh format. The domain is supplied by the caller since
/// the file only carries the triangulation.
template <int Dim>
Mesh<Dim> load_mesh(std::istream& in, const Domain<Dim>& domain);

/// Dimension declared on the first non-comment line of a mesh file.
int peek_mesh_dimension(std::istream& in);

/// First exit of the curve s -> x + s^2 * drift_step + s * diffusion_step,
/// s in (0, 1].
template <int Dim>
struct Exit {
    double s;
    Point<Dim> point;
};

template <int Dim>
std::optional<Exit<Dim>> first_exit(const Domain<Dim>& domain, const Point<Dim>& x,
                                    const Point<Dim>& drift_step,
                                    const Point<Dim>& diffusion_step);

/// Sampling + bisection exit search used for non-box domains; exposed so
/// the analytic box path can be cross-checked against it.
template <int Dim>
std::optional<Exit<Dim>> first_exit_sampled(const Domain<Dim>& domain, const Point<Dim>& x,
                                            const Point<Dim>& drift_step,
                                            const Point<Dim>& diffusion_step);

}  // namespace hjbsl
