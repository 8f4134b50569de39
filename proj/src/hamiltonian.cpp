#include "hklab/hamiltonian.hpp"

#include <bit>
#include <string>

namespace hklab {

namespace {

using Triplet = Eigen::Triplet<Complex>;

SparseCMatrix from_triplets(int dim, const std::vector<Triplet>& triplets) {
  SparseCMatrix m(dim, dim);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.prune(Complex(0.0, 0.0));
  return m;
}

std::vector<int> single_block(int dim) { return {0, dim}; }

double pair_energy(Mask m, const LatticeSpace& space, const RMatrix& kernel) {
  double e = 0.0;
  for (Mask a = m; a != 0; a &= a - 1) {
    const int p = std::countr_zero(a);
    for (Mask b = a & (a - 1); b != 0; b &= b - 1) {
      const int q = std::countr_zero(b);
      e += kernel(space.site_of(p), space.site_of(q));
    }
  }
  return e;
}

void append_one_body(const OccupationBasis& basis, const CMatrix& t, std::vector<Triplet>& out) {
  const int D = basis.space().dim();
  for (int j = 0; j < basis.dim(); ++j) {
    const Mask m = basis[j];
    for (Mask occ = m; occ != 0; occ &= occ - 1) {
      const int q = std::countr_zero(occ);
      const Mask removed = m ^ (Mask{1} << q);
      const double sign_q = (occupied_below(m, q) % 2) ? -1.0 : 1.0;
      for (int p = 0; p < D; ++p) {
        if (removed & (Mask{1} << p)) continue;
        const Complex amp = t(p, q);
        if (amp == Complex(0.0, 0.0)) continue;
        const Mask target = removed | (Mask{1} << p);
        const auto i = basis.index_of(target);
        if (!i) continue;
        const double sign_p = (occupied_below(removed, p) % 2) ? -1.0 : 1.0;
        out.emplace_back(*i, j, amp * (sign_q * sign_p));
      }
    }
  }
}

void require_same_space(const OccupationBasis& basis, const LatticeSpace& space, const char* who) {
  if (!(basis.space() == space))
    throw InvalidArgument(std::string(who) + ": operator and basis live on different lattices");
}

void require_pair_size(const OccupationBasis& basis, const PairPotential& pair, const char* who) {
  if (pair.num_sites() != basis.space().num_sites())
    throw InvalidArgument(std::string(who) + ": pair potential has " +
                          std::to_string(pair.num_sites()) + " sites, lattice has " +
                          std::to_string(basis.space().num_sites()));
}

}  // namespace

ManyBodyOperator::ManyBodyOperator(SparseCMatrix matrix, std::vector<int> blocks,
                                   std::string description)
    : matrix_(std::move(matrix)), blocks_(std::move(blocks)), description_(std::move(description)) {
  if (matrix_.rows() != matrix_.cols()) throw InvalidArgument("ManyBodyOperator: not square");
  matrix_.makeCompressed();
}

CMatrix ManyBodyOperator::dense() const {
  if (dim() > kDenseLimit)
    throw InvalidArgument("ManyBodyOperator: dimension " + std::to_string(dim()) +
                          " exceeds dense limit");
  return CMatrix(matrix_);
}

CMatrix ManyBodyOperator::dense_block(int block) const {
  if (block < 0 || block + 1 >= static_cast<int>(blocks_.size()))
    throw InvalidArgument("ManyBodyOperator: no such block");
  const int begin = blocks_[block];
  const int size = blocks_[block + 1] - begin;
  if (size > kDenseLimit) throw InvalidArgument("ManyBodyOperator: block exceeds dense limit");
  CMatrix out = CMatrix::Zero(size, size);
  for (int r = begin; r < begin + size; ++r)
    for (SparseCMatrix::InnerIterator it(matrix_, r); it; ++it) {
      const int c = static_cast<int>(it.col());
      if (c >= begin && c < begin + size) out(r - begin, c - begin) = it.value();
    }
  return out;
}

double ManyBodyOperator::expectation(const CVector& psi) const {
  return psi.dot(matrix_ * psi).real();
}

SparseCMatrix diagonal_sparse(const RVector& diag) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(diag.size()));
  for (int i = 0; i < diag.size(); ++i)
    if (diag(i) != 0.0) t.emplace_back(i, i, Complex(diag(i), 0.0));
  return from_triplets(static_cast<int>(diag.size()), t);
}

ManyBodyOperator assemble_one_body(const OccupationBasis& basis, const OneBodyOperator& op) {
  require_same_space(basis, op.space(), "assemble_one_body");
  std::vector<Triplet> t;
  append_one_body(basis, op.matrix(), t);
  return {from_triplets(basis.dim(), t), single_block(basis.dim()), "one-body"};
}

ManyBodyOperator assemble_pair(const OccupationBasis& basis, const PairPotential& pair) {
  require_pair_size(basis, pair, "assemble_pair");
  RVector diag(basis.dim());
  for (int i = 0; i < basis.dim(); ++i) diag(i) = pair_energy(basis[i], basis.space(), pair.kernel());
  return {diagonal_sparse(diag), single_block(basis.dim()), "pair"};
}

ManyBodyOperator assemble_hamiltonian(const SectorBasis& basis, const OneBodyOperator& one_body,
                                      const std::optional<PairPotential>& pair) {
  require_same_space(basis, one_body.space(), "assemble_hamiltonian");
  std::vector<Triplet> t;
  append_one_body(basis, one_body.matrix(), t);
  if (pair) {
    require_pair_size(basis, *pair, "assemble_hamiltonian");
    for (int i = 0; i < basis.dim(); ++i) {
      const double e = pair_energy(basis[i], basis.space(), pair->kernel());
      if (e != 0.0) t.emplace_back(i, i, Complex(e, 0.0));
    }
  }
  return {from_triplets(basis.dim(), t), single_block(basis.dim()),
          "sector N=" + std::to_string(basis.num_particles())};
}

ManyBodyOperator assemble_fock_hamiltonian(const FockBasis& fock, const OneBodyOperator& one_body,
                                           const std::optional<PairPotential>& pair) {
  require_same_space(fock, one_body.space(), "assemble_fock_hamiltonian");
  if (pair) require_pair_size(fock, *pair, "assemble_fock_hamiltonian");
  // Particle number is conserved, so the flat assembly is block diagonal.
  std::vector<Triplet> t;
  append_one_body(fock, one_body.matrix(), t);
  if (pair) {
    for (int i = 0; i < fock.dim(); ++i) {
      const double e = pair_energy(fock[i], fock.space(), pair->kernel());
      if (e != 0.0) t.emplace_back(i, i, Complex(e, 0.0));
    }
  }
  std::vector<int> blocks;
  for (int n = 0; n <= fock.max_particles() + 1; ++n)
    blocks.push_back(n <= fock.max_particles() ? fock.sector_offset(n) : fock.dim());
  return {from_triplets(fock.dim(), t), std::move(blocks),
          "fock N_max=" + std::to_string(fock.max_particles())};
}

ManyBodyOperator assemble_two_species(const TwoSpeciesSpec& spec, const LatticeSpace& space) {
  spec.validate(space);
  const TwoSpeciesBasis basis(space, spec.num_a, spec.num_b);
  const OneBodyOperator kin = kinetic_operator(space);
  const OneBodyOperator h_a = kin + local_potential_operator(space, spec.v_a);
  const OneBodyOperator h_b = kin.scaled(spec.alpha) + local_potential_operator(space, spec.v_b);
  const ManyBodyOperator ha =
      assemble_hamiltonian(basis.a(), h_a, PairPotential::from_displacement(space, spec.w_a));
  const ManyBodyOperator hb =
      assemble_hamiltonian(basis.b(), h_b, PairPotential::from_displacement(space, spec.w_b));
  const PairPotential w_ab = PairPotential::from_displacement(space, spec.w_ab);

  const int da = basis.a().dim();
  const int db = basis.b().dim();
  std::vector<Triplet> t;
  for (int r = 0; r < da; ++r)
    for (SparseCMatrix::InnerIterator it(ha.sparse(), r); it; ++it)
      for (int k = 0; k < db; ++k)
        t.emplace_back(r * db + k, static_cast<int>(it.col()) * db + k, it.value());
  for (int r = 0; r < db; ++r)
    for (SparseCMatrix::InnerIterator it(hb.sparse(), r); it; ++it)
      for (int k = 0; k < da; ++k)
        t.emplace_back(k * db + r, k * db + static_cast<int>(it.col()), it.value());
  for (int ia = 0; ia < da; ++ia) {
    for (int ib = 0; ib < db; ++ib) {
      double e = 0.0;
      for (Mask a = basis.a()[ia]; a != 0; a &= a - 1)
        for (Mask b = basis.b()[ib]; b != 0; b &= b - 1)
          e += w_ab(space.site_of(std::countr_zero(a)), space.site_of(std::countr_zero(b)));
      if (e != 0.0) t.emplace_back(ia * db + ib, ia * db + ib, Complex(e, 0.0));
    }
  }
  return {from_triplets(da * db, t), single_block(da * db),
          "two-species N=" + std::to_string(spec.num_a) + " M=" + std::to_string(spec.num_b)};
}

ManyBodyOperator spin_z_operator(const OccupationBasis& basis) {
  if (basis.space().spin_dim() != 2) throw InvalidArgument("spin_z_operator: requires q = 2");
  RVector diag(basis.dim());
  for (int i = 0; i < basis.dim(); ++i) {
    double s = 0.0;
    for (Mask a = basis[i]; a != 0; a &= a - 1)
      s += basis.space().spin_of(std::countr_zero(a)) == 0 ? 1.0 : -1.0;
    diag(i) = s;
  }
  return {diagonal_sparse(diag), single_block(basis.dim()), "sum sigma_z"};
}

std::vector<RVector> site_occupations(const OccupationBasis& basis) {
  const LatticeSpace& space = basis.space();
  std::vector<RVector> n(static_cast<std::size_t>(space.num_sites()), RVector::Zero(basis.dim()));
  for (int i = 0; i < basis.dim(); ++i)
    for (Mask a = basis[i]; a != 0; a &= a - 1) n[space.site_of(std::countr_zero(a))](i) += 1.0;
  return n;
}

ManyBodyOperator creation_operator(const FockBasis& fock, int mode) {
  if (mode < 0 || mode >= fock.space().dim())
    throw InvalidArgument("creation_operator: mode out of range");
  std::vector<Triplet> t;
  const Mask bit = Mask{1} << mode;
  for (int j = 0; j < fock.dim(); ++j) {
    const Mask m = fock[j];
    if (m & bit) continue;
    const auto i = fock.index_of(m | bit);
    if (!i) continue;
    t.emplace_back(*i, j, Complex((occupied_below(m, mode) % 2) ? -1.0 : 1.0, 0.0));
  }
  SparseCMatrix mat(fock.dim(), fock.dim());
  mat.setFromTriplets(t.begin(), t.end());
  return {std::move(mat), {}, "creation"};
}

}  // namespace hklab
