#include "equisampler/bln.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <stdexcept>
#include <utility>

namespace eqs {

static_assert(sizeof(Vec3) == 3 * sizeof(double));
static_assert(alignof(Vec3) == alignof(double));

namespace {

constexpr double kSinFloor = 1e-10;  // guard for near-collinear bends/torsions

ResidueKind kind_from_letter(char ch, std::size_t pos) {
  switch (ch) {
    case 'B': return ResidueKind::B;
    case 'L': return ResidueKind::L;
    case 'N': return ResidueKind::N;
    default:
      throw std::invalid_argument("sequence: unexpected character '" +
                                  std::string(1, ch) + "' at position " +
                                  std::to_string(pos));
  }
}

}  // namespace

char residue_letter(ResidueKind kind) {
  switch (kind) {
    case ResidueKind::B: return 'B';
    case ResidueKind::L: return 'L';
    default: return 'N';
  }
}

Sequence::Sequence(std::vector<ResidueKind> kinds) : kinds_(std::move(kinds)) {
  if (kinds_.empty()) throw std::invalid_argument("sequence: empty");
}

const char* Sequence::beta_barrel_46_text() { return "(BL)2B5N3(LB)4N3B9N3(LB)5L"; }

Sequence Sequence::parse(std::string_view text) {
  std::vector<ResidueKind> kinds;
  std::size_t i = 0;
  const std::size_t n = text.size();

  auto read_count = [&](bool& present) -> std::size_t {
    present = i < n && std::isdigit(static_cast<unsigned char>(text[i])) != 0;
    if (!present) return 1;
    const std::size_t at = i;
    std::size_t value = 0;
    while (i < n && std::isdigit(static_cast<unsigned char>(text[i])) != 0) {
      value = value * 10 + static_cast<std::size_t>(text[i] - '0');
      if (value > 1000000)
        throw std::invalid_argument("sequence: repeat count too large at position " +
                                    std::to_string(at));
      ++i;
    }
    if (value == 0)
      throw std::invalid_argument("sequence: zero repeat count at position " +
                                  std::to_string(at));
    return value;
  };

  while (i < n) {
    const char ch = text[i];
    if (ch == '(') {
      const std::size_t open = i;
      ++i;
      std::vector<ResidueKind> group;
      while (i < n && text[i] != ')') group.push_back(kind_from_letter(text[i], i)), ++i;
      if (i == n)
        throw std::invalid_argument("sequence: unbalanced '(' at position " +
                                    std::to_string(open));
      if (group.empty())
        throw std::invalid_argument("sequence: empty group at position " +
                                    std::to_string(open));
      ++i;  // consume ')'
      bool present = false;
      const std::size_t count = read_count(present);
      for (std::size_t r = 0; r < count; ++r)
        kinds.insert(kinds.end(), group.begin(), group.end());
    } else if (ch == ')') {
      throw std::invalid_argument("sequence: unbalanced ')' at position " +
                                  std::to_string(i));
    } else {
      const ResidueKind kind = kind_from_letter(ch, i);
      ++i;
      bool present = false;
      const std::size_t count = read_count(present);
      kinds.insert(kinds.end(), count, kind);
    }
  }
  if (kinds.empty()) throw std::invalid_argument("sequence: empty");
  return Sequence(std::move(kinds));
}

std::size_t Sequence::count(ResidueKind kind) const {
  return static_cast<std::size_t>(std::count(kinds_.begin(), kinds_.end(), kind));
}

std::string Sequence::render() const {
  std::string out;
  out.reserve(kinds_.size());
  for (ResidueKind k : kinds_) out.push_back(residue_letter(k));
  return out;
}

std::vector<bool> flexible_torsions(const Sequence& seq, TorsionRule rule) {
  if (seq.size() < 4) throw std::invalid_argument("flexible_torsions: need at least 4 beads");
  const std::size_t threshold = rule == TorsionRule::TwoOrMoreNeutral ? 2 : 3;
  std::vector<bool> flexible(seq.size() - 3, false);
  for (std::size_t d = 0; d + 3 < seq.size(); ++d) {
    std::size_t neutrals = 0;
    for (std::size_t b = d; b < d + 4; ++b)
      if (seq[b] == ResidueKind::N) ++neutrals;
    flexible[d] = neutrals >= threshold;
  }
  return flexible;
}

BLNModel::BLNModel(Sequence sequence, BLNParams params)
    : sequence_(std::move(sequence)), params_(params) {
  if (sequence_.size() < 4)
    throw std::invalid_argument("BLNModel: need at least 4 beads");
  if (!(params_.bond_k > 0.0) || !(params_.bend_k > 0.0) || !(params_.sigma > 0.0))
    throw std::invalid_argument("BLNModel: stiffnesses and sigma must be positive");
  flexible_ = flexible_torsions(sequence_, params_.torsion_rule);

  const std::size_t n = sequence_.size();
  pair_table_.assign(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      PairKind kind = PairKind::BB;
      if (sequence_[i] == ResidueKind::N || sequence_[j] == ResidueKind::N)
        kind = PairKind::NX;
      else if (sequence_[i] == ResidueKind::L || sequence_[j] == ResidueKind::L)
        kind = PairKind::LX;
      pair_table_[i * n + j] = static_cast<std::uint8_t>(kind);
    }
  }
  unfolded_energy_ = energy(std::span<const Vec3>(extended().positions));
}

BLNModel::PairKind BLNModel::pair_kind(std::size_t i, std::size_t j) const {
  return static_cast<PairKind>(pair_table_[i * sequence_.size() + j]);
}

std::uint64_t BLNModel::degenerate_geometry_events() const { return degenerate_events_; }

template <bool WithGradient>
double BLNModel::eval(std::span<const Vec3> pos, std::span<Vec3> grad) const {
  const std::size_t n = sequence_.size();
  const BLNParams& p = params_;
  double total = 0.0;
  if constexpr (WithGradient)
    for (Vec3& g : grad) g = Vec3{};

  // bonds
  for (std::size_t i = 1; i < n; ++i) {
    const Vec3 b = pos[i] - pos[i - 1];
    const double d = norm(b);
    const double stretch = d - p.sigma;
    total += 0.5 * p.bond_k * stretch * stretch;
    if constexpr (WithGradient) {
      const Vec3 f = (p.bond_k * stretch / d) * b;
      grad[i] += f;
      grad[i - 1] -= f;
    }
  }

  // bends: angle at bead v = i-1 over (i-2, i-1, i)
  for (std::size_t i = 2; i < n; ++i) {
    const Vec3 u = pos[i - 2] - pos[i - 1];
    const Vec3 w = pos[i] - pos[i - 1];
    const double lu = norm(u), lw = norm(w);
    double c = dot(u, w) / (lu * lw);
    c = std::clamp(c, -1.0, 1.0);
    const double theta = std::acos(c);
    const double dev = theta - p.bend_theta0;
    total += 0.5 * p.bend_k * dev * dev;
    if constexpr (WithGradient) {
      double s = std::sqrt(1.0 - c * c);
      if (s < kSinFloor) {
        s = kSinFloor;
        ++degenerate_events_;
      }
      const double coeff = p.bend_k * dev;
      const Vec3 uh = (1.0 / lu) * u;
      const Vec3 wh = (1.0 / lw) * w;
      const Vec3 ga = (1.0 / (lu * s)) * (c * uh - wh);
      const Vec3 gc = (1.0 / (lw * s)) * (c * wh - uh);
      grad[i - 2] += coeff * ga;
      grad[i] += coeff * gc;
      grad[i - 1] -= coeff * (ga + gc);
    }
  }

  // torsions over beads (d, d+1, d+2, d+3)
  for (std::size_t d = 0; d + 3 < n; ++d) {
    const Vec3 b1 = pos[d + 1] - pos[d];
    const Vec3 b2 = pos[d + 2] - pos[d + 1];
    const Vec3 b3 = pos[d + 3] - pos[d + 2];
    const Vec3 m = cross(b1, b2);
    const Vec3 nv = cross(b2, b3);
    const double lb2 = norm(b2);
    const double phi = std::atan2(lb2 * dot(b1, nv), dot(m, nv));
    const double a = flexible_[d] ? p.flex_a : p.rigid_a;
    const double b = flexible_[d] ? p.flex_b : p.rigid_b;
    total += a * (1.0 + std::cos(phi)) + b * (1.0 + std::cos(3.0 * phi));
    if constexpr (WithGradient) {
      const double dv = -a * std::sin(phi) - 3.0 * b * std::sin(3.0 * phi);
      double m2 = norm2(m), n2 = norm2(nv);
      const double floor2 = kSinFloor * kSinFloor;
      if (m2 < floor2 || n2 < floor2) {
        m2 = std::max(m2, floor2);
        n2 = std::max(n2, floor2);
        ++degenerate_events_;
      }
      const Vec3 dphi0 = (-lb2 / m2) * m;
      const Vec3 dphi3 = (lb2 / n2) * nv;
      const double s1 = dot(b1, b2) / (lb2 * lb2);
      const double s2 = dot(b3, b2) / (lb2 * lb2);
      const Vec3 dphi1 = (-1.0 - s1) * dphi0 + s2 * dphi3;
      const Vec3 dphi2 = s1 * dphi0 + (-1.0 - s2) * dphi3;
      grad[d] += dv * dphi0;
      grad[d + 1] += dv * dphi1;
      grad[d + 2] += dv * dphi2;
      grad[d + 3] += dv * dphi3;
    }
  }

  // nonbonded pairs at least three bonds apart
  const double sigma2 = p.sigma * p.sigma;
  for (std::size_t i = 0; i + 3 < n; ++i) {
    for (std::size_t j = i + 3; j < n; ++j) {
      const Vec3 r = pos[j] - pos[i];
      const double r2 = norm2(r);
      if (r2 == 0.0) return std::numeric_limits<double>::infinity();
      const double x6 = sigma2 * sigma2 * sigma2 / (r2 * r2 * r2);  // (sigma/r)^6
      double v, dv_r2;  // dv_r2 = dV/d(r^2) / 1
      switch (pair_kind(i, j)) {
        case PairKind::BB:
          v = 4.0 * p.eps_h * (x6 * x6 - x6);
          dv_r2 = 4.0 * p.eps_h * (-6.0 * x6 * x6 + 3.0 * x6) / r2;
          break;
        case PairKind::LX:
          v = (8.0 / 3.0) * p.eps_h * (x6 * x6 + x6);
          dv_r2 = (8.0 / 3.0) * p.eps_h * (-6.0 * x6 * x6 - 3.0 * x6) / r2;
          break;
        default:  // NX
          v = 4.0 * p.eps_h * x6 * x6;
          dv_r2 = 4.0 * p.eps_h * (-6.0 * x6 * x6) / r2;
          break;
      }
      total += v;
      if constexpr (WithGradient) {
        const Vec3 f = (2.0 * dv_r2) * r;  // dV/dr_j = dV/d(r^2) * 2 r
        grad[j] += f;
        grad[i] -= f;
      }
    }
  }
  return total;
}

double BLNModel::energy(std::span<const Vec3> pos) const {
  return eval<false>(pos, {});
}

void BLNModel::gradient(std::span<const Vec3> pos, std::span<Vec3> grad) const {
  eval<true>(pos, grad);
}

double BLNModel::energy_and_gradient(std::span<const Vec3> pos, std::span<Vec3> grad) const {
  return eval<true>(pos, grad);
}

double BLNModel::energy(std::span<const double> state) const {
  const auto* v = reinterpret_cast<const Vec3*>(state.data());
  return energy(std::span<const Vec3>(v, sequence_.size()));
}

void BLNModel::gradient(std::span<const double> state, std::span<double> grad) const {
  auto* g = reinterpret_cast<Vec3*>(grad.data());
  const auto* v = reinterpret_cast<const Vec3*>(state.data());
  gradient(std::span<const Vec3>(v, sequence_.size()), std::span<Vec3>(g, sequence_.size()));
}

double BLNModel::energy_and_gradient(std::span<const double> state,
                                     std::span<double> grad) const {
  auto* g = reinterpret_cast<Vec3*>(grad.data());
  const auto* v = reinterpret_cast<const Vec3*>(state.data());
  return energy_and_gradient(std::span<const Vec3>(v, sequence_.size()),
                             std::span<Vec3>(g, sequence_.size()));
}

Conformation BLNModel::extended() const {
  const std::size_t n = sequence_.size();
  // Bond directions alternate +/- gamma off the x axis, so every bend equals
  // theta0 and every torsion is trans.
  const double gamma = 0.5 * (std::numbers::pi - params_.bend_theta0);
  const Vec3 up{std::cos(gamma), std::sin(gamma), 0.0};
  const Vec3 down{std::cos(gamma), -std::sin(gamma), 0.0};
  std::vector<Vec3> pos(n);
  for (std::size_t i = 1; i < n; ++i)
    pos[i] = pos[i - 1] + params_.sigma * (i % 2 == 1 ? up : down);
  return Conformation{sequence_, std::move(pos)};
}

}  // namespace eqs
