#include "hjbsl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace hjbsl {

namespace {

constexpr double kBaryTolerance = 1e-12;
constexpr int kExitSamples = 64;
constexpr double kBisectionTolerance = 1e-12;

Point<2> closest_on_segment(const Point<2>& x, const Point<2>& a, const Point<2>& b)
{
    const Point<2> ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 == 0.0) return a;
    const double t = std::clamp((x - a).dot(ab) / len2, 0.0, 1.0);
    return a + t * ab;
}

template <int Dim>
double simplex_volume(const std::array<Point<Dim>, Dim + 1>& v)
{
    Eigen::Matrix<double, Dim, Dim> jac;
    for (int c = 0; c < Dim; ++c) jac.col(c) = v[c + 1] - v[0];
    double fact = 1.0;
    for (int k = 2; k <= Dim; ++k) fact *= k;
    return std::abs(jac.determinant()) / fact;
}

// Smallest root of a*s^2 + b*s + c = 0 in (0, 1], if any.
std::optional<double> smallest_unit_root(double a, double b, double c)
{
    std::optional<double> best;
    auto consider = [&](double s) {
        if (std::isfinite(s) && s > 0.0 && s <= 1.0 && (!best || s < *best)) best = s;
    };
    if (a == 0.0) {
        if (b != 0.0) consider(-c / b);
        return best;
    }
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return best;
    const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    if (q != 0.0) {
        consider(q / a);
        consider(c / q);
    } else {
        consider(0.0);
    }
    return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// Domain

template <int Dim>
Domain<Dim> Domain<Dim>::box(const Point<Dim>& lo, const Point<Dim>& hi)
{
    if (!((hi - lo).array() > 0.0).all())
        throw std::invalid_argument("box domain: degenerate bounds (zero or negative extent)");
    Domain d;
    d.shape_ = DomainShape::box;
    d.lo_ = lo;
    d.hi_ = hi;
    d.center_ = 0.5 * (lo + hi);
    return d;
}

template <int Dim>
Domain<Dim> Domain<Dim>::disk(const Point<Dim>& center, double radius)
    requires(Dim == 2)
{
    if (!(radius > 0.0)) throw std::invalid_argument("disk domain: radius must be positive");
    Domain d;
    d.shape_ = DomainShape::disk;
    d.center_ = center;
    d.radius_ = radius;
    d.lo_ = center.array() - radius;
    d.hi_ = center.array() + radius;
    return d;
}

template <int Dim>
Domain<Dim> Domain<Dim>::convex_polygon(std::vector<Point<Dim>> vertices)
    requires(Dim == 2)
{
    if (vertices.size() < 3) throw std::invalid_argument("polygon domain: need at least 3 vertices");
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point<2> e1 = vertices[(i + 1) % n] - vertices[i];
        const Point<2> e2 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
        if (e1.x() * e2.y() - e1.y() * e2.x() <= 0.0)
            throw std::invalid_argument("polygon domain: vertices must be strictly convex and counter-clockwise");
    }
    Domain d;
    d.shape_ = DomainShape::polygon;
    d.lo_ = vertices.front();
    d.hi_ = vertices.front();
    for (const auto& v : vertices) {
        d.lo_ = d.lo_.cwiseMin(v);
        d.hi_ = d.hi_.cwiseMax(v);
    }
    d.center_ = 0.5 * (d.lo_ + d.hi_);
    d.vertices_ = std::move(vertices);
    return d;
}

template <int Dim>
double Domain<Dim>::signed_distance(const Point<Dim>& x) const
{
    switch (shape_) {
    case DomainShape::box: {
        const Point<Dim> half = 0.5 * (hi_ - lo_);
        const Point<Dim> q = (x - center_).cwiseAbs() - half;
        return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
    }
    case DomainShape::disk:
        return (x - center_).norm() - radius_;
    case DomainShape::polygon:
        if constexpr (Dim == 2) {
            const std::size_t n = vertices_.size();
            double worst = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i) {
                const Point<2> e = vertices_[(i + 1) % n] - vertices_[i];
                const Point<2> normal = Point<2>(e.y(), -e.x()).normalized();
                worst = std::max(worst, normal.dot(x - vertices_[i]));
            }
            if (worst <= 0.0) return worst;
            double dist = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i)
                dist = std::min(dist, (x - closest_on_segment(x, vertices_[i], vertices_[(i + 1) % n])).norm());
            return dist;
        }
    }
    return 0.0;
}

template <int Dim>
Point<Dim> Domain<Dim>::project_boundary(const Point<Dim>& x) const
{
    switch (shape_) {
    case DomainShape::box: {
        if (!inside(x)) return x.cwiseMax(lo_).cwiseMin(hi_);
        Point<Dim> out = x;
        int best_dim = 0;
        bool to_hi = false;
        double best = std::numeric_limits<double>::infinity();
        for (int d = 0; d < Dim; ++d) {
            if (x[d] - lo_[d] < best) { best = x[d] - lo_[d]; best_dim = d; to_hi = false; }
            if (hi_[d] - x[d] < best) { best = hi_[d] - x[d]; best_dim = d; to_hi = true; }
        }
        out[best_dim] = to_hi ? hi_[best_dim] : lo_[best_dim];
        return out;
    }
    case DomainShape::disk: {
        const Point<Dim> r = x - center_;
        const double norm = r.norm();
        if (norm == 0.0) return center_ + radius_ * Point<Dim>::UnitX();
        return center_ + (radius_ / norm) * r;
    }
    case DomainShape::polygon:
        if constexpr (Dim == 2) {
            const std::size_t n = vertices_.size();
            Point<2> best = vertices_.front();
            double best_dist = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i) {
                const Point<2> q = closest_on_segment(x, vertices_[i], vertices_[(i + 1) % n]);
                const double dist = (x - q).norm();
                if (dist < best_dist) { best_dist = dist; best = q; }
            }
            return best;
        }
    }
    return x;
}

template <int Dim>
double Domain<Dim>::diameter() const
{
    switch (shape_) {
    case DomainShape::box: return (hi_ - lo_).norm();
    case DomainShape::disk: return 2.0 * radius_;
    case DomainShape::polygon: {
        double diam = 0.0;
        for (const auto& a : vertices_)
            for (const auto& b : vertices_) diam = std::max(diam, (a - b).norm());
        return diam;
    }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Mesh

template <int Dim>
Mesh<Dim>::Mesh(Domain<Dim> domain, std::vector<Point<Dim>> vertices,
                std::vector<std::uint8_t> boundary, std::vector<Element> elements,
                std::optional<LatticeInfo<Dim>> lattice)
    : domain_(std::move(domain)),
      vertices_(std::move(vertices)),
      boundary_(std::move(boundary)),
      elements_(std::move(elements)),
      lattice_(std::move(lattice))
{
    validate();
    for (int i = 0; i < num_vertices(); ++i)
        if (!boundary_[i]) interior_.push_back(i);

    inverse_jacobian_.reserve(elements_.size());
    h_ = 0.0;
    for (const auto& el : elements_) {
        Eigen::Matrix<double, Dim, Dim> jac;
        for (int c = 0; c < Dim; ++c) jac.col(c) = vertices_[el[c + 1]] - vertices_[el[0]];
        inverse_jacobian_.push_back(jac.inverse());
        for (int a = 0; a <= Dim; ++a)
            for (int b = a + 1; b <= Dim; ++b)
                h_ = std::max(h_, (vertices_[el[a]] - vertices_[el[b]]).norm());
    }

    delta_ = 1.0;
    for (const auto& el : elements_) {
        std::array<Point<Dim>, Dim + 1> v;
        for (int a = 0; a <= Dim; ++a) v[a] = vertices_[el[a]];
        double inradius = 0.0;
        double circumradius = 0.0;
        if constexpr (Dim == 1) {
            inradius = circumradius = 0.5 * std::abs(v[1][0] - v[0][0]);
        } else {
            const double la = (v[1] - v[2]).norm();
            const double lb = (v[0] - v[2]).norm();
            const double lc = (v[0] - v[1]).norm();
            const double area = simplex_volume<Dim>(v);
            inradius = 2.0 * area / (la + lb + lc);
            circumradius = la * lb * lc / (4.0 * area);
        }
        delta_ = std::min({delta_, inradius / h_, h_ / circumradius});
    }
    build_locator();
}

template <int Dim>
void Mesh<Dim>::validate() const
{
    if (vertices_.empty()) throw MeshError("mesh has no vertices");
    if (elements_.empty()) throw MeshError("mesh has no elements");
    if (boundary_.size() != vertices_.size())
        throw MeshError("boundary flag count differs from vertex count");

    const double tol = domain_.boundary_tolerance();
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        if (!vertices_[i].allFinite())
            throw MeshError("vertex " + std::to_string(i) + " has non-finite coordinates");
        const double sd = domain_.signed_distance(vertices_[i]);
        if (boundary_[i] && std::abs(sd) > tol)
            throw MeshError("boundary-flagged vertex " + std::to_string(i) + " is not on the domain boundary");
        if (!boundary_[i] && !(sd < -tol))
            throw MeshError("interior vertex " + std::to_string(i) + " is not strictly inside the domain");
    }

    const int n = static_cast<int>(vertices_.size());
    double scale = 0.0;
    for (const auto& v : vertices_) scale = std::max(scale, v.cwiseAbs().maxCoeff());
    scale = std::max(scale, domain_.diameter());
    for (std::size_t e = 0; e < elements_.size(); ++e) {
        std::array<Point<Dim>, Dim + 1> v;
        for (int a = 0; a <= Dim; ++a) {
            const int idx = elements_[e][a];
            if (idx < 0 || idx >= n)
                throw MeshError("element " + std::to_string(e) + " has invalid vertex index " + std::to_string(idx));
            v[a] = vertices_[idx];
        }
        if (!(simplex_volume<Dim>(v) > 1e-14 * std::pow(scale, Dim)))
            throw MeshError("element " + std::to_string(e) + " is degenerate (zero measure)");
    }
}

template <int Dim>
Eigen::Matrix<double, Dim + 1, 1> Mesh<Dim>::barycentric(int e, const Point<Dim>& x) const
{
    const Point<Dim> local = inverse_jacobian_[e] * (x - vertices_[elements_[e][0]]);
    Eigen::Matrix<double, Dim + 1, 1> bary;
    bary[0] = 1.0 - local.sum();
    bary.template tail<Dim>() = local;
    return bary;
}

template <int Dim>
std::array<int, Dim> Mesh<Dim>::bucket_cell(const Point<Dim>& x) const
{
    std::array<int, Dim> cell;
    for (int d = 0; d < Dim; ++d) {
        const int c = static_cast<int>(std::floor((x[d] - bucket_lo_[d]) / bucket_size_));
        cell[d] = std::clamp(c, 0, bucket_counts_[d] - 1);
    }
    return cell;
}

template <int Dim>
int Mesh<Dim>::bucket_index(const std::array<int, Dim>& cell) const
{
    int idx = 0;
    for (int d = Dim - 1; d >= 0; --d) idx = idx * bucket_counts_[d] + cell[d];
    return idx;
}

template <int Dim>
void Mesh<Dim>::build_locator()
{
    auto [lo, hi] = domain_.bounds();
    for (const auto& v : vertices_) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    bucket_size_ = 2.0 * h_;
    bucket_lo_ = lo.array() - h_;
    int total = 1;
    for (int d = 0; d < Dim; ++d) {
        bucket_counts_[d] = std::max(1, static_cast<int>(std::ceil((hi[d] - lo[d] + 2.0 * h_) / bucket_size_)));
        total *= bucket_counts_[d];
    }

    std::vector<std::vector<int>> lists(total);
    for (int e = 0; e < num_elements(); ++e) {
        Point<Dim> elo = vertices_[elements_[e][0]];
        Point<Dim> ehi = elo;
        for (int a = 1; a <= Dim; ++a) {
            elo = elo.cwiseMin(vertices_[elements_[e][a]]);
            ehi = ehi.cwiseMax(vertices_[elements_[e][a]]);
        }
        const auto c0 = bucket_cell(elo);
        const auto c1 = bucket_cell(ehi);
        std::array<int, Dim> c = c0;
        while (true) {
            lists[bucket_index(c)].push_back(e);
            int d = 0;
            for (; d < Dim; ++d) {
                if (++c[d] <= c1[d]) break;
                c[d] = c0[d];
            }
            if (d == Dim) break;
        }
    }
    bucket_start_.assign(total + 1, 0);
    for (int b = 0; b < total; ++b) bucket_start_[b + 1] = bucket_start_[b] + static_cast<int>(lists[b].size());
    bucket_elements_.clear();
    bucket_elements_.reserve(bucket_start_.back());
    for (const auto& l : lists) bucket_elements_.insert(bucket_elements_.end(), l.begin(), l.end());
}

template <int Dim>
ElementHit<Dim> Mesh<Dim>::locate(const Point<Dim>& x) const
{
    return lattice_ ? locate_lattice(x) : locate_buckets(x);
}

template <int Dim>
ElementHit<Dim> Mesh<Dim>::locate_lattice(const Point<Dim>& x) const
{
    const auto& lat = *lattice_;
    const Point<Dim> hi = lat.lo + (lat.spacing.array() * Eigen::Array<double, Dim, 1>::NullaryExpr(
                                         [&](Eigen::Index d) { return double(lat.cells[d]); })).matrix();
    const Point<Dim> p = x.cwiseMax(lat.lo).cwiseMin(hi);
    if ((p - x).norm() > h_)
        throw OutOfDomain("point lies more than one element diameter outside the mesh");

    std::array<int, Dim> cell;
    Point<Dim> frac;
    for (int d = 0; d < Dim; ++d) {
        const double u = (p[d] - lat.lo[d]) / lat.spacing[d];
        cell[d] = std::clamp(static_cast<int>(std::floor(u)), 0, lat.cells[d] - 1);
        frac[d] = std::clamp(u - cell[d], 0.0, 1.0);
    }

    ElementHit<Dim> hit;
    hit.projected = p;
    if constexpr (Dim == 1) {
        hit.element = cell[0];
        hit.barycentric << 1.0 - frac[0], frac[0];
    } else {
        const double fu = frac[0];
        const double fv = frac[1];
        const int base = 2 * (cell[1] * lat.cells[0] + cell[0]);
        if (fu >= fv) {
            hit.element = base;
            hit.barycentric << 1.0 - fu, fu - fv, fv;
        } else {
            hit.element = base + 1;
            hit.barycentric << 1.0 - fv, fu, fv - fu;
        }
    }
    return hit;
}

template <int Dim>
ElementHit<Dim> Mesh<Dim>::locate_buckets(const Point<Dim>& x) const
{
    const auto cell = bucket_cell(x);
    const int b = bucket_index(cell);
    for (int k = bucket_start_[b]; k < bucket_start_[b + 1]; ++k) {
        const int e = bucket_elements_[k];
        const auto bary = barycentric(e, x);
        if (bary.minCoeff() >= -kBaryTolerance) return {e, bary, x};
    }

    // x is outside the polyhedral hull: nearest-point projection.
    double best_dist = std::numeric_limits<double>::infinity();
    int best_elem = -1;
    Point<Dim> best_point = x;
    std::array<int, Dim> lo_c, hi_c;
    for (int d = 0; d < Dim; ++d) {
        lo_c[d] = std::max(cell[d] - 1, 0);
        hi_c[d] = std::min(cell[d] + 1, bucket_counts_[d] - 1);
    }
    std::array<int, Dim> c = lo_c;
    while (true) {
        const int bb = bucket_index(c);
        for (int k = bucket_start_[bb]; k < bucket_start_[bb + 1]; ++k) {
            const int e = bucket_elements_[k];
            const auto& el = elements_[e];
            Point<Dim> q;
            if constexpr (Dim == 1) {
                const double a = std::min(vertices_[el[0]][0], vertices_[el[1]][0]);
                const double z = std::max(vertices_[el[0]][0], vertices_[el[1]][0]);
                q[0] = std::clamp(x[0], a, z);
            } else {
                const auto bary = barycentric(e, x);
                if (bary.minCoeff() >= 0.0) {
                    q = x;
                } else {
                    double qd = std::numeric_limits<double>::infinity();
                    for (int s = 0; s < 3; ++s) {
                        const Point<2> cand = closest_on_segment(x, vertices_[el[s]], vertices_[el[(s + 1) % 3]]);
                        const double dd = (cand - x).norm();
                        if (dd < qd) { qd = dd; q = cand; }
                    }
                }
            }
            const double dist = (q - x).norm();
            if (dist < best_dist || (dist == best_dist && e < best_elem)) {
                best_dist = dist;
                best_elem = e;
                best_point = q;
            }
        }
        int d = 0;
        for (; d < Dim; ++d) {
            if (++c[d] <= hi_c[d]) break;
            c[d] = lo_c[d];
        }
        if (d == Dim) break;
    }
    if (best_elem < 0 || best_dist > h_)
        throw OutOfDomain("point lies more than one element diameter outside the mesh");
    return {best_elem, barycentric(best_elem, best_point), best_point};
}

// ---------------------------------------------------------------------------
// Builders

Mesh<2> build_rect_grid(const Point<2>& lo, const Point<2>& hi, int nx, int ny)
{
    if (nx < 1 || ny < 1) throw std::invalid_argument("build_rect_grid: cell counts must be positive");
    auto domain = Domain<2>::box(lo, hi);
    const Point<2> spacing((hi.x() - lo.x()) / nx, (hi.y() - lo.y()) / ny);

    std::vector<Point<2>> vertices;
    std::vector<std::uint8_t> flags;
    vertices.reserve(std::size_t(nx + 1) * (ny + 1));
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            const double x = i == nx ? hi.x() : lo.x() + i * spacing.x();
            const double y = j == ny ? hi.y() : lo.y() + j * spacing.y();
            vertices.emplace_back(x, y);
            flags.push_back(i == 0 || i == nx || j == 0 || j == ny);
        }
    }
    std::vector<Mesh<2>::Element> elements;
    elements.reserve(std::size_t(2) * nx * ny);
    auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            elements.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
            elements.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
        }
    }
    return Mesh<2>(std::move(domain), std::move(vertices), std::move(flags), std::move(elements),
                   LatticeInfo<2>{lo, spacing, {nx, ny}});
}

Mesh<1> build_interval_mesh(double lo, double hi, int n)
{
    if (n < 1) throw std::invalid_argument("build_interval_mesh: cell count must be positive");
    auto domain = Domain<1>::box(Point<1>(lo), Point<1>(hi));
    const double spacing = (hi - lo) / n;
    std::vector<Point<1>> vertices;
    std::vector<std::uint8_t> flags;
    std::vector<Mesh<1>::Element> elements;
    for (int i = 0; i <= n; ++i) {
        vertices.emplace_back(i == n ? hi : lo + i * spacing);
        flags.push_back(i == 0 || i == n);
    }
    for (int i = 0; i < n; ++i) elements.push_back({i, i + 1});
    return Mesh<1>(std::move(domain), std::move(vertices), std::move(flags), std::move(elements),
                   LatticeInfo<1>{Point<1>(lo), Point<1>(spacing), {n}});
}

namespace {

// Ring spacing and arc spacing as fractions of the target element size.
constexpr double kDiskRadialFraction = 0.6;
constexpr double kDiskArcFraction = 0.6;

Mesh<2> polar_mesh(double radius, int rings, double arc_spacing)
{
    std::vector<Point<2>> vertices{Point<2>::Zero()};
    std::vector<std::uint8_t> flags{0};
    std::vector<Mesh<2>::Element> elements;

    std::vector<int> prev_ids{0};
    std::vector<double> prev_angles{0.0};
    for (int r = 1; r <= rings; ++r) {
        const double rad = r == rings ? radius : radius * r / rings;
        const int count = std::max(6, static_cast<int>(std::ceil(2.0 * std::numbers::pi * rad / arc_spacing)));
        const double offset = (r % 2) ? 0.5 : 0.0;
        std::vector<int> ids;
        std::vector<double> angles;
        for (int m = 0; m < count; ++m) {
            const double theta = 2.0 * std::numbers::pi * (m + offset) / count;
            ids.push_back(static_cast<int>(vertices.size()));
            angles.push_back(theta);
            vertices.emplace_back(rad * std::cos(theta), rad * std::sin(theta));
            flags.push_back(r == rings);
        }

        if (r == 1) {
            for (int m = 0; m < count; ++m) elements.push_back({0, ids[m], ids[(m + 1) % count]});
        } else {
            // Zip the two rings together in order of increasing angle.
            const int na = static_cast<int>(prev_ids.size());
            const int nb = count;
            auto angle_a = [&](int i) { return prev_angles[i % na] + (i >= na ? 2.0 * std::numbers::pi : 0.0); };
            auto angle_b = [&](int j) { return angles[j % nb] + (j >= nb ? 2.0 * std::numbers::pi : 0.0); };
            int i = 0;
            int j = 0;
            while (i < na || j < nb) {
                const bool advance_a = j == nb || (i < na && angle_a(i + 1) < angle_b(j + 1));
                if (advance_a) {
                    elements.push_back({prev_ids[i % na], prev_ids[(i + 1) % na], ids[j % nb]});
                    ++i;
                } else {
                    elements.push_back({prev_ids[i % na], ids[(j + 1) % nb], ids[j % nb]});
                    ++j;
                }
            }
        }
        prev_ids = std::move(ids);
        prev_angles = std::move(angles);
    }
    return Mesh<2>(Domain<2>::disk(Point<2>::Zero(), radius), std::move(vertices), std::move(flags),
                   std::move(elements));
}

}  // namespace

Mesh<2> build_disk_mesh(double radius, double target_h)
{
    if (!(target_h > 0.0 && target_h < radius))
        throw std::invalid_argument("build_disk_mesh: need 0 < target_h < radius");
    int rings = static_cast<int>(std::ceil(radius / (kDiskRadialFraction * target_h)));
    double arc = kDiskArcFraction * target_h;
    while (true) {
        Mesh<2> mesh = polar_mesh(radius, rings, arc);
        if (mesh.mesh_size() <= target_h * (1.0 + 1e-9)) return mesh;
        ++rings;
        arc *= 0.95;
    }
}

// ---------------------------------------------------------------------------
// Text format

template <int Dim>
void save_mesh(std::ostream& out, const Mesh<Dim>& mesh)
{
    const auto old_precision = out.precision(17);
    out << "DIM " << Dim << "\n";
    out << "VERTICES " << mesh.num_vertices() << "\n";
    for (int i = 0; i < mesh.num_vertices(); ++i) {
        for (int d = 0; d < Dim; ++d) out << mesh.vertex(i)[d] << ' ';
        out << int(mesh.is_boundary(i)) << "\n";
    }
    out << "ELEMENTS " << mesh.num_elements() << "\n";
    for (const auto& el : mesh.elements()) {
        for (int a = 0; a <= Dim; ++a) out << el[a] << (a == Dim ? '\n' : ' ');
    }
    out.precision(old_precision);
}

namespace {

class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    // Next non-empty line with comments stripped.
    std::istringstream next(const char* what)
    {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
            if (line.find_first_not_of(" \t\r") != std::string::npos) return std::istringstream(line);
        }
        throw MeshError("line " + std::to_string(line_no_ + 1) + ": unexpected end of file, expected " + what);
    }

    [[noreturn]] void fail(const std::string& msg) const
    {
        throw MeshError("line " + std::to_string(line_no_) + ": " + msg);
    }

    int line_no() const { return line_no_; }

private:
    std::istream& in_;
    int line_no_ = 0;
};

long read_header(LineReader& reader, const char* keyword)
{
    auto ss = reader.next(keyword);
    std::string key;
    long value = -1;
    if (!(ss >> key >> value) || key != keyword || value < 0)
        reader.fail(std::string("expected '") + keyword + " <count>'");
    return value;
}

}  // namespace

int peek_mesh_dimension(std::istream& in)
{
    LineReader reader(in);
    return static_cast<int>(read_header(reader, "DIM"));
}

template <int Dim>
Mesh<Dim> load_mesh(std::istream& in, const Domain<Dim>& domain)
{
    LineReader reader(in);
    if (read_header(reader, "DIM") != Dim) reader.fail("dimension mismatch, expected DIM " + std::to_string(Dim));
    const long nv = read_header(reader, "VERTICES");
    std::vector<Point<Dim>> vertices;
    std::vector<std::uint8_t> flags;
    vertices.reserve(nv);
    for (long i = 0; i < nv; ++i) {
        auto ss = reader.next("vertex line");
        Point<Dim> p;
        for (int d = 0; d < Dim; ++d)
            if (!(ss >> p[d])) reader.fail("malformed vertex coordinates");
        int flag = -1;
        if (!(ss >> flag) || (flag != 0 && flag != 1)) reader.fail("vertex flag must be 0 or 1");
        std::string extra;
        if (ss >> extra) reader.fail("trailing data on vertex line");
        vertices.push_back(p);
        flags.push_back(static_cast<std::uint8_t>(flag));
    }
    const long ne = read_header(reader, "ELEMENTS");
    std::vector<typename Mesh<Dim>::Element> elements;
    elements.reserve(ne);
    for (long e = 0; e < ne; ++e) {
        auto ss = reader.next("element line");
        typename Mesh<Dim>::Element el;
        for (int a = 0; a <= Dim; ++a)
            if (!(ss >> el[a])) reader.fail("malformed element indices");
        std::string extra;
        if (ss >> extra) reader.fail("trailing data on element line");
        elements.push_back(el);
    }
    return Mesh<Dim>(domain, std::move(vertices), std::move(flags), std::move(elements));
}

// ---------------------------------------------------------------------------
// Exit search

template <int Dim>
std::optional<Exit<Dim>> first_exit_sampled(const Domain<Dim>& domain, const Point<Dim>& x,
                                            const Point<Dim>& drift_step,
                                            const Point<Dim>& diffusion_step)
{
    auto path = [&](double s) -> Point<Dim> { return x + (s * s) * drift_step + s * diffusion_step; };

    // The curve is a quadratic Bezier arc with control points x,
    // x + diffusion/2 and x + drift + diffusion; on a convex domain it stays
    // inside when all three do.
    const Point<Dim> mid = x + 0.5 * diffusion_step;
    const Point<Dim> end = x + drift_step + diffusion_step;
    if (domain.inside(mid) && domain.inside(end)) return std::nullopt;

    double prev = 0.0;
    for (int j = 1; j <= kExitSamples; ++j) {
        const double s = double(j) / kExitSamples;
        if (domain.inside(path(s))) {
            prev = s;
            continue;
        }
        double lo = prev;
        double hi = s;
        while (hi - lo > kBisectionTolerance) {
            const double m = 0.5 * (lo + hi);
            (domain.inside(path(m)) ? lo : hi) = m;
        }
        return Exit<Dim>{hi, domain.project_boundary(path(hi))};
    }
    return std::nullopt;
}

template <int Dim>
std::optional<Exit<Dim>> first_exit(const Domain<Dim>& domain, const Point<Dim>& x,
                                    const Point<Dim>& drift_step,
                                    const Point<Dim>& diffusion_step)
{
    if (domain.shape() != DomainShape::box) return first_exit_sampled(domain, x, drift_step, diffusion_step);

    std::optional<double> best;
    int best_dim = -1;
    bool best_hi = false;
    for (int d = 0; d < Dim; ++d) {
        for (bool upper : {false, true}) {
            const double bound = upper ? domain.hi()[d] : domain.lo()[d];
            const auto s = smallest_unit_root(drift_step[d], diffusion_step[d], x[d] - bound);
            if (s && (!best || *s < *best)) {
                best = s;
                best_dim = d;
                best_hi = upper;
            }
        }
    }
    if (!best) return std::nullopt;
    const double s = *best;
    Point<Dim> p = (x + (s * s) * drift_step + s * diffusion_step).cwiseMax(domain.lo()).cwiseMin(domain.hi());
    p[best_dim] = best_hi ? domain.hi()[best_dim] : domain.lo()[best_dim];
    return Exit<Dim>{s, p};
}

// ---------------------------------------------------------------------------

template class Domain<1>;
template class Domain<2>;
template class Mesh<1>;
template class Mesh<2>;
template void save_mesh<1>(std::ostream&, const Mesh<1>&);
template void save_mesh<2>(std::ostream&, const Mesh<2>&);
template Mesh<1> load_mesh<1>(std::istream&, const Domain<1>&);
template Mesh<2> load_mesh<2>(std::istream&, const Domain<2>&);
template std::optional<Exit<1>> first_exit<1>(const Domain<1>&, const Point<1>&, const Point<1>&, const Point<1>&);
template std::optional<Exit<2>> first_exit<2>(const Domain<2>&, const Point<2>&, const Point<2>&, const Point<2>&);
template std::optional<Exit<1>> first_exit_sampled<1>(const Domain<1>&, const Point<1>&, const Point<1>&,
                                                      const Point<1>&);
template std::optional<Exit<2>> first_exit_sampled<2>(const Domain<2>&, const Point<2>&, const Point<2>&,
                                                      const Point<2>&);

}  // namespace hjbsl
