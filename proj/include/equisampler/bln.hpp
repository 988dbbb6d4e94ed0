#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "equisampler/energy.hpp"
#include "equisampler/rng.hpp"

namespace eqs {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }
inline Vec3& operator+=(Vec3& a, Vec3 b) { a = a + b; return a; }
inline Vec3& operator-=(Vec3& a, Vec3 b) { a = a - b; return a; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm2(Vec3 v) { return dot(v, v); }
inline double norm(Vec3 v) { return std::sqrt(norm2(v)); }

// Hydrophobic / hydrophilic / neutral bead kinds.
enum class ResidueKind : std::uint8_t { B, L, N };

char residue_letter(ResidueKind kind);

// Residue chain parsed from the run-length grammar: atoms B|L|N, optionally
// followed by a positive repeat count, and groups "(...)k".
class Sequence {
 public:
  static Sequence parse(std::string_view text);
  Sequence() = default;  // empty; filled via parse or the explicit constructor
  explicit Sequence(std::vector<ResidueKind> kinds);

  // The 46-bead benchmark chain folding into a beta barrel.
  static const char* beta_barrel_46_text();

  std::size_t size() const { return kinds_.size(); }
  ResidueKind operator[](std::size_t i) const { return kinds_[i]; }
  std::span<const ResidueKind> kinds() const { return kinds_; }
  std::size_t count(ResidueKind kind) const;

  // Plain one-letter expansion; parse(render()) reproduces the sequence.
  std::string render() const;

  bool operator==(const Sequence&) const = default;

 private:
  std::vector<ResidueKind> kinds_;
};

// Which rule marks a torsion flexible, counting neutral beads among the four
// that span it. TwoOrMore is the standard rule; MoreThanTwo is kept as a
// sensitivity switch.
enum class TorsionRule { TwoOrMoreNeutral, MoreThanTwoNeutral };

// flexible[d] is true when the dihedral over beads (d, d+1, d+2, d+3) is
// flexible; there are n-3 torsions for an n-bead chain.
std::vector<bool> flexible_torsions(const Sequence& seq,
                                    TorsionRule rule = TorsionRule::TwoOrMoreNeutral);

struct BLNParams {
  double bond_k = 1000.0;       // eps_H / A^2
  double sigma = 1.0;           // A
  double bend_k = 20.0;         // eps_H / rad^2
  double bend_theta0 = 105.0 * std::numbers::pi / 180.0;
  double eps_h = 1.0;           // reduced energy unit
  double rigid_a = 1.2;         // torsion prefactors, in eps_H
  double rigid_b = 1.2;
  double flex_a = 0.0;
  double flex_b = 0.2;
  TorsionRule torsion_rule = TorsionRule::TwoOrMoreNeutral;
};

struct Conformation {
  Sequence sequence;
  std::vector<Vec3> positions;
};

// The bead-chain force field: harmonic bonds and bends, class-dependent
// torsions, and pair-specific nonbonded interactions between beads at least
// three bonds apart. Implements EnergyFunction over the 3n flat coordinates.
class BLNModel final : public EnergyFunction {
 public:
  explicit BLNModel(Sequence sequence, BLNParams params = {});

  const Sequence& sequence() const { return sequence_; }
  const BLNParams& params() const { return params_; }
  std::size_t bead_count() const { return sequence_.size(); }
  const std::vector<bool>& flexible() const { return flexible_; }

  double energy(std::span<const Vec3> pos) const;
  void gradient(std::span<const Vec3> pos, std::span<Vec3> grad) const;
  double energy_and_gradient(std::span<const Vec3> pos, std::span<Vec3> grad) const;

  double energy(const Conformation& c) const { return energy(std::span<const Vec3>(c.positions)); }

  // Planar zig-zag with ideal bonds and bends and all-trans torsions.
  Conformation extended() const;
  // Energy of the extended chain; the ladder's approximate upper bound.
  double unfolded_energy() const { return unfolded_energy_; }

  // Count of bend/torsion evaluations that hit the guarded near-collinear
  // regularization since construction.
  std::uint64_t degenerate_geometry_events() const;

  // EnergyFunction (flat xyz layout)
  std::size_t dimension() const override { return 3 * sequence_.size(); }
  double energy(std::span<const double> state) const override;
  void gradient(std::span<const double> state, std::span<double> grad) const override;
  double energy_and_gradient(std::span<const double> state,
                             std::span<double> grad) const override;

 private:
  enum class PairKind : std::uint8_t { BB, LX, NX };
  PairKind pair_kind(std::size_t i, std::size_t j) const;
  template <bool WithGradient>
  double eval(std::span<const Vec3> pos, std::span<Vec3> grad) const;

  Sequence sequence_;
  BLNParams params_;
  std::vector<bool> flexible_;
  std::vector<std::uint8_t> pair_table_;
  double unfolded_energy_ = 0.0;
  mutable std::uint64_t degenerate_events_ = 0;
};

// Angle at vertex b formed by a and c, in [0, pi].
double bond_angle(Vec3 a, Vec3 b, Vec3 c);

// Signed dihedral over the four points, in (-pi, pi]; 0 is cis, pi is trans.
// Throws std::domain_error when an inner bond pair is collinear.
double dihedral_angle(Vec3 p0, Vec3 p1, Vec3 p2, Vec3 p3);

// Dihedral d spans beads (d, d+1, d+2, d+3), d in [0, n-4].
double dihedral_angle(const Conformation& c, std::size_t d);

// Rotates beads d+3..n-1 rigidly about the (d+1, d+2) bond so that dihedral d
// becomes phi_new. Every other internal coordinate is unchanged.
Conformation set_torsion(const Conformation& c, std::size_t d, double phi_new);

// Minimum RMSD over rigid translations and proper rotations (quaternion
// superposition; reflections excluded).
double rmsd(const Conformation& a, const Conformation& b);

// Redraws every flexible dihedral uniformly on (-pi, pi], rejecting draws
// that bring any nonbonded pair closer than 0.5 sigma. Throws after 1000
// failed attempts.
Conformation randomize_loops(const Conformation& c, const BLNModel& model, Rng& rng);

struct QuenchResult {
  Conformation conformation;
  double energy = 0.0;
  double gradient_inf_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Gradient descent with backtracking line search until the gradient infinity
// norm drops below tolerance or max_iterations pass. Energy never increases.
QuenchResult quench(const BLNModel& model, const Conformation& start,
                    double tolerance = 1e-6, std::size_t max_iterations = 100000);

// XYZ-like text format: bead count, comment line, then "KIND x y z" per bead
// with coordinates at 17 significant digits (bit-exact decimal round trip).
void write_xyz(std::ostream& out, const Conformation& c, std::string_view comment);
void write_xyz_file(const std::filesystem::path& path, const Conformation& c,
                    std::string_view comment);
Conformation read_xyz(std::istream& in);
Conformation read_xyz_file(const std::filesystem::path& path);

}  // namespace eqs
