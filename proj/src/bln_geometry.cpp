#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "equisampler/bln.hpp"

namespace eqs {

namespace {

constexpr double kCollinearFloor = 1e-12;

void write_full_precision(std::ostream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

// Rodrigues rotation of v about the unit axis u by angle a.
Vec3 rotate_about(Vec3 v, Vec3 u, double a) {
  const double c = std::cos(a);
  const double s = std::sin(a);
  return c * v + s * cross(u, v) + (dot(u, v) * (1.0 - c)) * u;
}

// Eigenvector of the largest eigenvalue of a symmetric 4x4 matrix by cyclic
// Jacobi sweeps with accumulated rotations.
std::array<double, 4> top_eigenvector_sym4(std::array<std::array<double, 4>, 4> a) {
  std::array<std::array<double, 4>, 4> v = {{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}};
  const double scale = std::max({std::abs(a[0][0]), std::abs(a[1][1]), std::abs(a[2][2]),
                                 std::abs(a[3][3]), 1e-300});
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < 4; ++p)
      for (int q = p + 1; q < 4; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30 * scale * scale) break;
    for (int p = 0; p < 4; ++p) {
      for (int q = p + 1; q < 4; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int r = 0; r < 4; ++r) {
          const double arp = a[r][p], arq = a[r][q];
          a[r][p] = c * arp - s * arq;
          a[r][q] = s * arp + c * arq;
        }
        for (int r = 0; r < 4; ++r) {
          const double apr = a[p][r], aqr = a[q][r];
          a[p][r] = c * apr - s * aqr;
          a[q][r] = s * apr + c * aqr;
        }
        for (int r = 0; r < 4; ++r) {
          const double vrp = v[r][p], vrq = v[r][q];
          v[r][p] = c * vrp - s * vrq;
          v[r][q] = s * vrp + c * vrq;
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i < 4; ++i)
    if (a[i][i] > a[best][best]) best = i;
  return {v[0][best], v[1][best], v[2][best], v[3][best]};
}

}  // namespace

double bond_angle(Vec3 a, Vec3 b, Vec3 c) {
  const Vec3 u = a - b;
  const Vec3 w = c - b;
  double cosv = dot(u, w) / (norm(u) * norm(w));
  cosv = std::clamp(cosv, -1.0, 1.0);
  return std::acos(cosv);
}

double dihedral_angle(Vec3 p0, Vec3 p1, Vec3 p2, Vec3 p3) {
  const Vec3 b1 = p1 - p0;
  const Vec3 b2 = p2 - p1;
  const Vec3 b3 = p3 - p2;
  const Vec3 m = cross(b1, b2);
  const Vec3 n = cross(b2, b3);
  if (norm2(m) < kCollinearFloor || norm2(n) < kCollinearFloor)
    throw std::domain_error("dihedral_angle: collinear bond triple");
  const double phi = std::atan2(norm(b2) * dot(b1, n), dot(m, n));
  return phi == -std::numbers::pi ? std::numbers::pi : phi;
}

double dihedral_angle(const Conformation& c, std::size_t d) {
  if (d + 3 >= c.positions.size())
    throw std::invalid_argument("dihedral_angle: index out of range");
  return dihedral_angle(c.positions[d], c.positions[d + 1], c.positions[d + 2],
                        c.positions[d + 3]);
}

Conformation set_torsion(const Conformation& c, std::size_t d, double phi_new) {
  if (d + 3 >= c.positions.size())
    throw std::invalid_argument("set_torsion: index out of range");
  const Vec3 pivot = c.positions[d + 2];
  const Vec3 axis = c.positions[d + 2] - c.positions[d + 1];
  const double len = norm(axis);
  if (len * len < kCollinearFloor) throw std::domain_error("set_torsion: degenerate axis");
  const double current = dihedral_angle(c, d);
  // Rotating the tail right-handedly about the d+1 -> d+2 axis adds the
  // rotation angle to the dihedral.
  double delta = phi_new - current;
  const Vec3 u = (1.0 / len) * axis;
  Conformation out = c;
  for (std::size_t b = d + 3; b < c.positions.size(); ++b)
    out.positions[b] = pivot + rotate_about(c.positions[b] - pivot, u, delta);
  return out;
}

double rmsd(const Conformation& a, const Conformation& b) {
  const std::size_t n = a.positions.size();
  if (n != b.positions.size()) throw std::invalid_argument("rmsd: length mismatch");
  Vec3 ca{}, cb{};
  for (std::size_t i = 0; i < n; ++i) {
    ca += a.positions[i];
    cb += b.positions[i];
  }
  ca = (1.0 / static_cast<double>(n)) * ca;
  cb = (1.0 / static_cast<double>(n)) * cb;

  double sxx = 0, sxy = 0, sxz = 0, syx = 0, syy = 0, syz = 0, szx = 0, szy = 0, szz = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = a.positions[i] - ca;
    const Vec3 q = b.positions[i] - cb;
    sxx += p.x * q.x; sxy += p.x * q.y; sxz += p.x * q.z;
    syx += p.y * q.x; syy += p.y * q.y; syz += p.y * q.z;
    szx += p.z * q.x; szy += p.z * q.y; szz += p.z * q.z;
  }

  // Quaternion superposition: the eigenvector of the key matrix's largest
  // eigenvalue encodes the proper rotation minimizing the deviation. The
  // deviation itself is summed over rotated coordinates rather than taken
  // from the eigenvalue, which loses all precision near zero.
  const std::array<std::array<double, 4>, 4> key = {{
      {sxx + syy + szz, syz - szy, szx - sxz, sxy - syx},
      {syz - szy, sxx - syy - szz, sxy + syx, szx + sxz},
      {szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy},
      {sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz},
  }};
  const std::array<double, 4> q = top_eigenvector_sym4(key);
  const double q0 = q[0], q1 = q[1], q2 = q[2], q3 = q[3];
  const double r[3][3] = {
      {q0 * q0 + q1 * q1 - q2 * q2 - q3 * q3, 2.0 * (q1 * q2 - q0 * q3),
       2.0 * (q1 * q3 + q0 * q2)},
      {2.0 * (q1 * q2 + q0 * q3), q0 * q0 - q1 * q1 + q2 * q2 - q3 * q3,
       2.0 * (q2 * q3 - q0 * q1)},
      {2.0 * (q1 * q3 - q0 * q2), 2.0 * (q2 * q3 + q0 * q1),
       q0 * q0 - q1 * q1 - q2 * q2 + q3 * q3}};

  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = a.positions[i] - ca;
    const Vec3 w = b.positions[i] - cb;
    const Vec3 rw{r[0][0] * w.x + r[1][0] * w.y + r[2][0] * w.z,
                  r[0][1] * w.x + r[1][1] * w.y + r[2][1] * w.z,
                  r[0][2] * w.x + r[1][2] * w.y + r[2][2] * w.z};
    sum += norm2(p - rw);
  }
  return std::sqrt(sum / static_cast<double>(n));
}

Conformation randomize_loops(const Conformation& c, const BLNModel& model, Rng& rng) {
  if (c.positions.size() != model.bead_count())
    throw std::invalid_argument("randomize_loops: conformation does not match model");
  const std::vector<bool>& flexible = model.flexible();
  const bool any = std::find(flexible.begin(), flexible.end(), true) != flexible.end();
  if (!any) return c;

  const double min_dist2 = 0.25 * model.params().sigma * model.params().sigma;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Conformation trial = c;
    for (std::size_t d = 0; d < flexible.size(); ++d) {
      if (!flexible[d]) continue;
      // uniform on (-pi, pi]
      const double phi = std::numbers::pi - 2.0 * std::numbers::pi * rng.uniform();
      trial = set_torsion(trial, d, phi);
    }
    bool clash = false;
    const auto& pos = trial.positions;
    for (std::size_t i = 0; i + 3 < pos.size() && !clash; ++i)
      for (std::size_t j = i + 3; j < pos.size(); ++j)
        if (norm2(pos[j] - pos[i]) < min_dist2) {
          clash = true;
          break;
        }
    if (!clash) return trial;
  }
  throw std::runtime_error("randomize_loops: no clash-free draw in 1000 attempts");
}

QuenchResult quench(const BLNModel& model, const Conformation& start, double tolerance,
                    std::size_t max_iterations) {
  const std::size_t n = model.bead_count();
  if (start.positions.size() != n)
    throw std::invalid_argument("quench: conformation does not match model");

  QuenchResult result{start};
  std::vector<Vec3>& pos = result.conformation.positions;
  std::vector<Vec3> grad(n), trial(n);

  double energy = model.energy_and_gradient(pos, grad);
  if (!std::isfinite(energy))
    throw std::invalid_argument("quench: non-finite energy at the starting point");

  auto inf_norm = [](const std::vector<Vec3>& g) {
    double m = 0.0;
    for (const Vec3& v : g)
      m = std::max({m, std::abs(v.x), std::abs(v.y), std::abs(v.z)});
    return m;
  };
  auto grad_norm2 = [](const std::vector<Vec3>& g) {
    double s = 0.0;
    for (const Vec3& v : g) s += norm2(v);
    return s;
  };

  // Steepest descent with an Armijo backtracking line search. The trial step
  // starts from a Barzilai-Borwein estimate of the local curvature, which cuts
  // the iteration count enormously on the stiff bond terms.
  std::vector<Vec3> prev_pos(n), prev_grad(n);
  double step = 1e-4;
  bool have_prev = false;
  constexpr double kArmijo = 1e-4;
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    result.gradient_inf_norm = inf_norm(grad);
    result.iterations = iter;
    if (result.gradient_inf_norm < tolerance) {
      result.converged = true;
      break;
    }
    if (have_prev) {
      double sy = 0.0, ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const Vec3 s = pos[i] - prev_pos[i];
        const Vec3 y = grad[i] - prev_grad[i];
        sy += dot(s, y);
        ss += dot(s, s);
      }
      if (sy > 0.0 && ss > 0.0) step = std::clamp(ss / sy, 1e-12, 1.0);
    }
    const double g2 = grad_norm2(grad);
    prev_pos = pos;
    prev_grad = grad;
    bool moved = false;
    while (step > 1e-18) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = pos[i] - step * grad[i];
      const double trial_energy = model.energy(std::span<const Vec3>(trial));
      if (std::isfinite(trial_energy) && trial_energy <= energy - kArmijo * step * g2) {
        pos.swap(trial);
        energy = trial_energy;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;  // step underflow: no further descent possible
    energy = model.energy_and_gradient(pos, grad);
    have_prev = true;
  }
  result.energy = energy;
  result.gradient_inf_norm = inf_norm(grad);
  return result;
}

void write_xyz(std::ostream& out, const Conformation& c, std::string_view comment) {
  out << c.positions.size() << '\n' << comment << '\n';
  for (std::size_t i = 0; i < c.positions.size(); ++i) {
    out << residue_letter(c.sequence[i]) << ' ';
    write_full_precision(out, c.positions[i].x);
    out << ' ';
    write_full_precision(out, c.positions[i].y);
    out << ' ';
    write_full_precision(out, c.positions[i].z);
    out << '\n';
  }
}

void write_xyz_file(const std::filesystem::path& path, const Conformation& c,
                    std::string_view comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  write_xyz(out, c, comment);
  if (!out.good()) throw std::runtime_error("write failed: " + path.string());
}

Conformation read_xyz(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("xyz: missing bead count");
  std::size_t n = 0;
  try {
    n = std::stoul(line);
  } catch (const std::exception&) {
    throw std::runtime_error("xyz: malformed bead count line");
  }
  if (n == 0) throw std::runtime_error("xyz: zero beads");
  if (!std::getline(in, line)) throw std::runtime_error("xyz: missing comment line");

  std::vector<ResidueKind> kinds;
  std::vector<Vec3> positions;
  kinds.reserve(n);
  positions.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw std::runtime_error("xyz: truncated bead list");
    std::istringstream row(line);
    std::string kind;
    Vec3 p;
    if (!(row >> kind >> p.x >> p.y >> p.z) || kind.size() != 1)
      throw std::runtime_error("xyz: malformed bead line " + std::to_string(i + 3));
    switch (kind[0]) {
      case 'B': kinds.push_back(ResidueKind::B); break;
      case 'L': kinds.push_back(ResidueKind::L); break;
      case 'N': kinds.push_back(ResidueKind::N); break;
      default: throw std::runtime_error("xyz: unknown bead kind '" + kind + "'");
    }
    positions.push_back(p);
  }
  return Conformation{Sequence(std::move(kinds)), std::move(positions)};
}

Conformation read_xyz_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  return read_xyz(in);
}

}  // namespace eqs
