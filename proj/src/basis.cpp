#include "hklab/basis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

namespace hklab {

int popcount(Mask m) { return std::popcount(m); }

int occupied_below(Mask m, int mode) {
  const Mask below = mode >= 64 ? ~Mask{0} : ((Mask{1} << mode) - 1);
  return std::popcount(m & below);
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / i;
  return r;
}

namespace {

bool ordered(Mask a, Mask b) {
  const int pa = std::popcount(a);
  const int pb = std::popcount(b);
  return pa != pb ? pa < pb : a < b;
}

// Masks over `modes` bits with exactly n bits set, ascending (Gosper's hack).
void append_combinations(int modes, int n, std::vector<Mask>& out) {
  if (n == 0) {
    out.push_back(0);
    return;
  }
  Mask m = (n == 64) ? ~Mask{0} : ((Mask{1} << n) - 1);
  const Mask limit = modes == 64 ? 0 : (Mask{1} << modes);
  while (true) {
    out.push_back(m);
    const Mask c = m & (~m + 1);
    const Mask r = m + c;
    if (r == 0) break;
    m = (((r ^ m) >> 2) / c) | r;
    if (limit != 0 && m >= limit) break;
  }
}

void check_dimension(std::uint64_t dim) {
  if (dim > 50'000'000ULL) throw InvalidArgument("basis dimension too large");
}

}  // namespace

OccupationBasis::OccupationBasis(LatticeSpace space, std::vector<Mask> masks)
    : space_(space), masks_(std::move(masks)) {}

std::optional<int> OccupationBasis::index_of(Mask m) const {
  auto it = std::lower_bound(masks_.begin(), masks_.end(), m, ordered);
  if (it == masks_.end() || *it != m) return std::nullopt;
  return static_cast<int>(it - masks_.begin());
}

static std::vector<Mask> sector_masks(const LatticeSpace& space, int n) {
  if (n < 1 || n > space.dim())
    throw InvalidArgument("build_sector_basis: particle number " + std::to_string(n) +
                          " outside [1, " + std::to_string(space.dim()) + "]");
  check_dimension(binomial(space.dim(), n));
  std::vector<Mask> masks;
  masks.reserve(binomial(space.dim(), n));
  append_combinations(space.dim(), n, masks);
  return masks;
}

SectorBasis::SectorBasis(const LatticeSpace& space, int num_particles)
    : OccupationBasis(space, sector_masks(space, num_particles)), num_particles_(num_particles) {}

static std::vector<Mask> fock_masks(const LatticeSpace& space, int n_max) {
  if (n_max < 0 || n_max > space.dim())
    throw InvalidArgument("build_fock_basis: max particle number " + std::to_string(n_max) +
                          " outside [0, " + std::to_string(space.dim()) + "]");
  std::uint64_t total = 0;
  for (int n = 0; n <= n_max; ++n) total += binomial(space.dim(), n);
  check_dimension(total);
  std::vector<Mask> masks;
  masks.reserve(total);
  for (int n = 0; n <= n_max; ++n) append_combinations(space.dim(), n, masks);
  return masks;
}

FockBasis::FockBasis(const LatticeSpace& space, int max_particles)
    : OccupationBasis(space, fock_masks(space, max_particles)), max_particles_(max_particles) {
  int offset = 0;
  for (int n = 0; n <= max_particles; ++n) {
    offsets_.push_back(offset);
    offset += static_cast<int>(binomial(space.dim(), n));
  }
  offsets_.push_back(offset);
}

int FockBasis::sector_dim(int n) const {
  return offsets_.at(static_cast<std::size_t>(n) + 1) - offsets_.at(static_cast<std::size_t>(n));
}

SectorBasis build_sector_basis(const LatticeSpace& space, int num_particles) {
  return SectorBasis(space, num_particles);
}

FockBasis build_fock_basis(const LatticeSpace& space, int max_particles) {
  return FockBasis(space, max_particles);
}

PairPotential::PairPotential(RMatrix kernel) : kernel_(std::move(kernel)) {
  if (kernel_.rows() != kernel_.cols() || kernel_.rows() < 1)
    throw InvalidArgument("PairPotential: kernel must be square");
  if (!kernel_.allFinite()) throw InvalidArgument("PairPotential: non-finite kernel");
  if ((kernel_ - kernel_.transpose()).cwiseAbs().maxCoeff() > kHermitianTol)
    throw InvalidArgument("PairPotential: kernel must be symmetric");
}

PairPotential PairPotential::from_displacement(const LatticeSpace& space, const RVector& w) {
  if (w.size() != space.num_distances())
    throw InvalidArgument("PairPotential: displacement form needs " +
                          std::to_string(space.num_distances()) + " values, got " +
                          std::to_string(w.size()));
  const int L = space.num_sites();
  RMatrix k(L, L);
  for (int x = 0; x < L; ++x)
    for (int y = 0; y < L; ++y) k(x, y) = w(space.distance(x, y));
  return PairPotential(std::move(k));
}

PairPotential PairPotential::zero(int num_sites) {
  return PairPotential(RMatrix::Zero(num_sites, num_sites));
}

void TwoSpeciesSpec::validate(const LatticeSpace& space) const {
  if (num_a < 1 || num_b < 1)
    throw InvalidArgument("TwoSpeciesSpec: both species need at least one particle");
  if (num_a > space.dim() || num_b > space.dim())
    throw InvalidArgument("TwoSpeciesSpec: particle number exceeds mode count");
  if (alpha == 0.0 || !std::isfinite(alpha))
    throw InvalidArgument("TwoSpeciesSpec: alpha must be finite and nonzero");
  const auto check = [&](const RVector& r, int n, const char* name) {
    if (r.size() != n)
      throw InvalidArgument(std::string("TwoSpeciesSpec: ") + name + " has wrong length");
  };
  check(v_a, space.num_sites(), "v_a");
  check(v_b, space.num_sites(), "v_b");
  check(w_a, space.num_distances(), "w_a");
  check(w_b, space.num_distances(), "w_b");
  check(w_ab, space.num_distances(), "w_ab");
}

TwoSpeciesBasis::TwoSpeciesBasis(const LatticeSpace& space, int num_a, int num_b)
    : a_(space, num_a), b_(space, num_b) {}

}  // namespace hklab
