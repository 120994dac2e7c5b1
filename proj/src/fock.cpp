#include "noncanon/fock.hpp"

#include <algorithm>
#include <cmath>

#include "noncanon/combinatorics.hpp"
#include "noncanon/permanent.hpp"

namespace noncanon {

SingleSpace::SingleSpace(int modes, int n_max) : modes_(modes), n_max_(n_max) {
  if (modes < 1) throw std::invalid_argument("oscillator space needs at least one mode");
  if (n_max < 1) throw std::invalid_argument("oscillator space needs n_max >= 1");
}

int SingleSpace::index(int k, int n_plus, int n_minus) const {
  if (k < 0 || k >= modes_ || n_plus < 0 || n_plus > n_max_ || n_minus < 0 || n_minus > n_max_)
    throw std::invalid_argument("basis label out of range");
  return (k * levels() + n_plus) * levels() + n_minus;
}

SingleSpace::Basis SingleSpace::decode(int idx) const {
  Basis b;
  b.n[1] = idx % levels();
  idx /= levels();
  b.n[0] = idx % levels();
  b.k = idx / levels();
  return b;
}

MultiSpace::MultiSpace(SingleSpace single, int oscillators, std::size_t max_amplitudes)
    : single_(single), n_(oscillators) {
  if (oscillators < 1) throw std::invalid_argument("need at least one oscillator");
  __int128 dim = 1;
  for (int j = 0; j < oscillators; ++j) {
    dim *= single_.dim();
    if (dim > static_cast<__int128>(max_amplitudes))
      throw CapError("state dimension " + std::to_string(single_.dim()) + "^" +
                     std::to_string(oscillators) + " exceeds the amplitude cap of " +
                     std::to_string(max_amplitudes));
  }
  dim_ = static_cast<std::size_t>(dim);
}

SparseOp annihilator_block(const SingleSpace& sp, int k, Helicity s) {
  if (k < 0 || k >= sp.modes()) throw std::invalid_argument("annihilator: mode index out of range");
  std::vector<Eigen::Triplet<Complex>> trip;
  const int si = index(s);
  for (int np = 0; np <= sp.n_max(); ++np)
    for (int nm = 0; nm <= sp.n_max(); ++nm) {
      int n[n_helicities] = {np, nm};
      if (n[si] == 0) continue;
      int to[n_helicities] = {np, nm};
      to[si] -= 1;
      trip.emplace_back(sp.index(k, to[0], to[1]), sp.index(k, np, nm),
                        std::sqrt(static_cast<double>(n[si])));
    }
  SparseOp op(sp.dim(), sp.dim());
  op.setFromTriplets(trip.begin(), trip.end());
  return op;
}

SparseOp creator_block(const SingleSpace& sp, int k, Helicity s) {
  return SparseOp(annihilator_block(sp, k, s).adjoint());
}

SparseOp mode_projector_block(const SingleSpace& sp, int k) {
  if (k < 0 || k >= sp.modes()) throw std::invalid_argument("projector: mode index out of range");
  std::vector<Eigen::Triplet<Complex>> trip;
  for (int np = 0; np <= sp.n_max(); ++np)
    for (int nm = 0; nm <= sp.n_max(); ++nm) {
      int i = sp.index(k, np, nm);
      trip.emplace_back(i, i, 1.0);
    }
  SparseOp op(sp.dim(), sp.dim());
  op.setFromTriplets(trip.begin(), trip.end());
  return op;
}

SparseOp number_block(const SingleSpace& sp) {
  std::vector<Eigen::Triplet<Complex>> trip;
  for (int k = 0; k < sp.modes(); ++k)
    for (int np = 0; np <= sp.n_max(); ++np)
      for (int nm = 0; nm <= sp.n_max(); ++nm) {
        int i = sp.index(k, np, nm);
        trip.emplace_back(i, i, static_cast<double>(np + nm));
      }
  SparseOp op(sp.dim(), sp.dim());
  op.setFromTriplets(trip.begin(), trip.end());
  return op;
}

SparseOp smeared_block(const SingleSpace& sp, const ModeSet& ms, const ModeAmplitudes& f,
                       SmearKind kind) {
  if (sp.modes() != ms.size())
    throw std::invalid_argument("smeared operator: space and mode set disagree on mode count");
  if (f.rows() != ms.size() || f.cols() != n_helicities)
    throw std::invalid_argument("smeared operator: amplitude map shape does not match mode set");
  SparseOp acc(sp.dim(), sp.dim());
  for (int k = 0; k < sp.modes(); ++k)
    for (int s = 0; s < n_helicities; ++s) {
      Complex c = f(k, s);
      if (c == Complex(0)) continue;
      if (kind == SmearKind::annihilate)
        acc += SparseOp(std::conj(c) * annihilator_block(sp, k, static_cast<Helicity>(s)));
      else
        acc += SparseOp(c * creator_block(sp, k, static_cast<Helicity>(s)));
    }
  return acc;
}

LiftedOperator::LiftedOperator(MultiSpace space, SparseOp block, double coeff)
    : space_(std::move(space)), block_(std::move(block)), coeff_(coeff) {
  if (block_.rows() != space_.single().dim() || block_.cols() != space_.single().dim())
    throw std::invalid_argument("lifted operator: block dimension mismatch");
}

Eigen::VectorXcd LiftedOperator::apply(const Eigen::VectorXcd& x) const {
  if (static_cast<std::size_t>(x.size()) != space_.dim())
    throw std::invalid_argument("lifted operator: state dimension mismatch");
  const int d = space_.single().dim();
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(x.size());
  std::size_t outer = 1;
  std::size_t inner = space_.dim() / static_cast<std::size_t>(d);
  for (int j = 0; j < space_.oscillators(); ++j) {
    for (std::size_t o = 0; o < outer; ++o) {
      const std::size_t base = o * static_cast<std::size_t>(d) * inner;
      for (int col = 0; col < d; ++col)
        for (SparseOp::InnerIterator it(block_, col); it; ++it)
          out.segment(base + static_cast<std::size_t>(it.row()) * inner, inner) +=
              (coeff_ * it.value()) *
              x.segment(base + static_cast<std::size_t>(col) * inner, inner);
    }
    outer *= static_cast<std::size_t>(d);
    inner /= static_cast<std::size_t>(d);
  }
  return out;
}

LiftedOperator LiftedOperator::adjoint() const {
  return LiftedOperator(space_, SparseOp(block_.adjoint()), coeff_);
}

LiftedOperator lift(const MultiSpace& space, const SparseOp& block, std::optional<double> coeff) {
  double c = coeff.value_or(1.0 / std::sqrt(static_cast<double>(space.oscillators())));
  return LiftedOperator(space, block, c);
}

FactorizedOperator::FactorizedOperator(MultiSpace space, Eigen::MatrixXcd block)
    : space_(std::move(space)), block_(std::move(block)) {
  if (block_.rows() != space_.single().dim() || block_.cols() != space_.single().dim())
    throw std::invalid_argument("factorized operator: block dimension mismatch");
}

Eigen::VectorXcd FactorizedOperator::apply(const Eigen::VectorXcd& x) const {
  if (static_cast<std::size_t>(x.size()) != space_.dim())
    throw std::invalid_argument("factorized operator: state dimension mismatch");
  const int d = space_.single().dim();
  Eigen::VectorXcd cur = x;
  Eigen::VectorXcd tmp(d), mapped(d);
  std::size_t outer = 1;
  std::size_t inner = space_.dim() / static_cast<std::size_t>(d);
  for (int j = 0; j < space_.oscillators(); ++j) {
    Eigen::VectorXcd next(cur.size());
    for (std::size_t o = 0; o < outer; ++o) {
      const std::size_t base = o * static_cast<std::size_t>(d) * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        for (int m = 0; m < d; ++m) tmp(m) = cur(base + static_cast<std::size_t>(m) * inner + i);
        mapped.noalias() = block_ * tmp;
        for (int m = 0; m < d; ++m) next(base + static_cast<std::size_t>(m) * inner + i) = mapped(m);
      }
    }
    cur.swap(next);
    outer *= static_cast<std::size_t>(d);
    inner /= static_cast<std::size_t>(d);
  }
  return cur;
}

FactorizedOperator FactorizedOperator::adjoint() const {
  return FactorizedOperator(space_, block_.adjoint());
}

Eigen::VectorXcd vacuum_single(const SingleSpace& sp, const ModeSet& ms) {
  if (sp.modes() != ms.size())
    throw std::invalid_argument("vacuum: space and mode set disagree on mode count");
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(sp.dim());
  for (int k = 0; k < ms.size(); ++k) v(sp.index(k, 0, 0)) = std::sqrt(ms.z(k));
  return v;
}

Eigen::VectorXcd coherent_single(const SingleSpace& sp, const ModeSet& ms,
                                 const CoherentSpec& alpha, int N) {
  alpha.validate(ms);
  if (sp.modes() != ms.size())
    throw std::invalid_argument("coherent state: space and mode set disagree on mode count");
  const double root_n = std::sqrt(static_cast<double>(N));
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(sp.dim());
  Eigen::MatrixXcd ladder(sp.levels(), n_helicities);
  for (int k = 0; k < ms.size(); ++k) {
    for (int s = 0; s < n_helicities; ++s) {
      Complex a = alpha.alpha(k, s) / root_n;
      ladder(0, s) = std::exp(-0.5 * std::norm(a));
      for (int n = 1; n <= sp.n_max(); ++n)
        ladder(n, s) = ladder(n - 1, s) * a / std::sqrt(static_cast<double>(n));
    }
    double root_z = std::sqrt(ms.z(k));
    for (int np = 0; np <= sp.n_max(); ++np)
      for (int nm = 0; nm <= sp.n_max(); ++nm)
        v(sp.index(k, np, nm)) = root_z * ladder(np, 0) * ladder(nm, 1);
  }
  return v;
}

namespace {
Eigen::VectorXcd tensor_power(const Eigen::VectorXcd& single, const MultiSpace& space) {
  Eigen::VectorXcd cur(1);
  cur(0) = 1.0;
  for (int j = 0; j < space.oscillators(); ++j) {
    Eigen::VectorXcd next(cur.size() * single.size());
    for (long i = 0; i < cur.size(); ++i)
      next.segment(i * single.size(), single.size()) = cur(i) * single;
    cur.swap(next);
  }
  return cur;
}
}  // namespace

State vacuum_state(const ModeSet& ms, int N, const TruncationSpec& trunc) {
  SingleSpace sp(ms.size(), trunc.n_max);
  MultiSpace space(sp, N, trunc.max_amplitudes);
  Eigen::VectorXcd amp = tensor_power(vacuum_single(sp, ms), space);
  return State{space, std::move(amp), 0.0};
}

State coherent_state(const ModeSet& ms, const CoherentSpec& alpha, int N,
                     const TruncationSpec& trunc) {
  SingleSpace sp(ms.size(), trunc.n_max);
  MultiSpace space(sp, N, trunc.max_amplitudes);
  Eigen::VectorXcd single = coherent_single(sp, ms, alpha, N);
  double single_norm2 = single.squaredNorm();
  double deficit = 1.0 - std::pow(single_norm2, N);
  if (deficit > trunc.norm_tolerance)
    throw NumericError("coherent state truncation misses tolerance: norm deficit " +
                       std::to_string(deficit) + " > " + std::to_string(trunc.norm_tolerance) +
                       " at n_max = " + std::to_string(trunc.n_max));
  Eigen::VectorXcd amp = tensor_power(single, space);
  return State{space, std::move(amp), std::max(deficit, 0.0)};
}

namespace {
// exp(beta a+ - conj(beta) a) on one truncated ladder. The truncated
// generator stays anti-Hermitian, so the result is exactly unitary; it
// differs from the truncation of the untruncated displacement by
// O(norm_tolerance) on states held inside the truncation.
Eigen::MatrixXcd ladder_displacement(int levels, Complex beta) {
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(levels, levels);
  for (int n = 1; n < levels; ++n) {
    Complex up = beta * std::sqrt(static_cast<double>(n));  // <n| B |n-1>
    h(n, n - 1) = Complex(0, -1) * up;                      // H = -i B
    h(n - 1, n) = std::conj(h(n, n - 1));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h);
  if (eig.info() != Eigen::Success)
    throw NumericError("displacement: ladder eigendecomposition failed");
  Eigen::VectorXcd phases =
      (Complex(0, 1) * eig.eigenvalues().cast<Complex>().array()).exp().matrix();
  return eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
}
}  // namespace

FactorizedOperator displacement_operator(const ModeSet& ms, const CoherentSpec& beta, int N,
                                         const TruncationSpec& trunc) {
  beta.validate(ms);
  SingleSpace sp(ms.size(), trunc.n_max);
  MultiSpace space(sp, N, trunc.max_amplitudes);
  const double root_n = std::sqrt(static_cast<double>(N));
  Eigen::MatrixXcd block = Eigen::MatrixXcd::Zero(sp.dim(), sp.dim());
  const int lv = sp.levels();
  for (int k = 0; k < ms.size(); ++k) {
    Eigen::MatrixXcd dp = ladder_displacement(lv, beta.alpha(k, 0) / root_n);
    Eigen::MatrixXcd dm = ladder_displacement(lv, beta.alpha(k, 1) / root_n);
    // kron(dp, dm) placed on the mode-k diagonal block.
    for (int np = 0; np < lv; ++np)
      for (int np2 = 0; np2 < lv; ++np2)
        for (int nm = 0; nm < lv; ++nm)
          for (int nm2 = 0; nm2 < lv; ++nm2)
            block(sp.index(k, np, nm), sp.index(k, np2, nm2)) = dp(np, np2) * dm(nm, nm2);
  }
  return FactorizedOperator(space, std::move(block));
}

Complex vacuum_expectation_class_sum(const std::vector<ModeAmplitudes>& fs,
                                     const std::vector<ModeAmplitudes>& gs, const ModeSet& ms,
                                     long long N) {
  const auto m = fs.size();
  if (m == 0 || gs.size() != m)
    throw std::invalid_argument("vacuum expectation: need equal nonempty operator lists");
  if (N < 1) throw std::invalid_argument("vacuum expectation: need N >= 1");
  const int modes = ms.size();
  // h[i][j](k) = sum_s conj(f_i(k,s)) g_j(k,s); Gram = z-weighted sum over k.
  std::vector<std::vector<Eigen::ArrayXcd>> h(m, std::vector<Eigen::ArrayXcd>(m));
  Eigen::MatrixXcd gram(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    if (fs[i].rows() != modes || gs[i].rows() != modes)
      throw std::invalid_argument("vacuum expectation: amplitude map shape mismatch");
    for (std::size_t j = 0; j < m; ++j) {
      Eigen::ArrayXcd acc = Eigen::ArrayXcd::Zero(modes);
      for (int s = 0; s < n_helicities; ++s)
        acc += fs[i].col(s).conjugate().array() * gs[j].col(s).array();
      h[i][j] = acc;
      gram(static_cast<long>(i), static_cast<long>(j)) =
          (ms.zs() * acc.real()).sum() + Complex(0, 1) * (ms.zs() * acc.imag()).sum();
    }
  }
  const auto partitions = set_partitions(static_cast<int>(m));
  // Weight of one set partition with b blocks: N (N-1) ... (N-b+1) / N^m,
  // exact when the integer path is in range.
  std::vector<double> weight_by_blocks(m + 1, 0.0);
  for (std::size_t b = 1; b <= m; ++b) {
    try {
      weight_by_blocks[b] = (Rational(falling_factorial(N, static_cast<int>(b))) /
                             Rational::pow(N, static_cast<int>(m)))
                                .to_double();
    } catch (const CapError&) {
      double w = 1.0;
      for (std::size_t i = 0; i < b; ++i) w *= static_cast<double>(N - static_cast<long long>(i));
      weight_by_blocks[b] = w / std::pow(static_cast<double>(N), static_cast<double>(m));
    }
  }
  std::vector<int> sigma(m);
  for (std::size_t i = 0; i < m; ++i) sigma[i] = static_cast<int>(i);
  Complex total = 0.0;
  do {
    for (const auto& part : partitions) {
      Complex term = weight_by_blocks[part.size()];
      for (const auto& block : part) {
        if (block.size() == 1) {
          term *= gram(block[0], sigma[static_cast<std::size_t>(block[0])]);
        } else {
          Complex acc = 0.0;
          for (int k = 0; k < modes; ++k) {
            Complex prod = ms.z(k);
            for (int i : block) prod *= h[static_cast<std::size_t>(i)]
                                          [static_cast<std::size_t>(sigma[static_cast<std::size_t>(i)])](k);
            acc += prod;
          }
          term *= acc;
        }
      }
      total += term;
    }
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  return total;
}

namespace {
Complex vacuum_expectation_tensor(const std::vector<ModeAmplitudes>& fs,
                                  const std::vector<ModeAmplitudes>& gs, const ModeSet& ms, int N,
                                  const TruncationSpec& trunc) {
  SingleSpace sp(ms.size(), trunc.n_max);
  MultiSpace space(sp, N, trunc.max_amplitudes);
  Eigen::VectorXcd vac = tensor_power(vacuum_single(sp, ms), space);
  Eigen::VectorXcd psi = vac;
  for (auto it = gs.rbegin(); it != gs.rend(); ++it)
    psi = lift(space, smeared_block(sp, ms, *it, SmearKind::create)).apply(psi);
  for (auto it = fs.rbegin(); it != fs.rend(); ++it)
    psi = lift(space, smeared_block(sp, ms, *it, SmearKind::annihilate)).apply(psi);
  return vac.dot(psi);
}
}  // namespace

VacuumExpectation vacuum_expectation(const std::vector<ModeAmplitudes>& fs,
                                     const std::vector<ModeAmplitudes>& gs, const ModeSet& ms,
                                     int N, const TruncationSpec& trunc) {
  VacuumExpectation out;
  out.class_sum = vacuum_expectation_class_sum(fs, gs, ms, N);
  const auto m = fs.size();
  if (static_cast<int>(m) > trunc.n_max)
    throw std::invalid_argument("vacuum expectation: truncation insufficient, n_max = " +
                                std::to_string(trunc.n_max) + " < m = " + std::to_string(m));
  // Tensor route only when the amplitude cap allows the full product space.
  __int128 dim = 1;
  bool feasible = true;
  SingleSpace sp(ms.size(), trunc.n_max);
  for (int j = 0; j < N; ++j) {
    dim *= sp.dim();
    if (dim > static_cast<__int128>(trunc.max_amplitudes)) {
      feasible = false;
      break;
    }
  }
  if (feasible) {
    out.tensor = vacuum_expectation_tensor(fs, gs, ms, N, trunc);
    double tol = 1e-12 * std::max(1.0, std::abs(out.class_sum));
    if (std::abs(*out.tensor - out.class_sum) > tol)
      throw NumericError("vacuum expectation: class-sum and tensor routes disagree by " +
                         std::to_string(std::abs(*out.tensor - out.class_sum)));
  }
  return out;
}

Complex thermodynamic_expectation(const std::vector<ModeAmplitudes>& fs,
                                  const std::vector<ModeAmplitudes>& gs, const ModeSet& ms) {
  const auto m = fs.size();
  if (m == 0 || gs.size() != m)
    throw std::invalid_argument("thermodynamic expectation: need equal nonempty lists");
  if (m > 8) throw CapError("thermodynamic expectation: permanent capped at m = 8");
  Eigen::MatrixXcd gram(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      gram(static_cast<long>(i), static_cast<long>(j)) = z_inner_product(ms, fs[i], gs[j]);
  return permanent(gram);
}

Complex uv_scalar_product(const ModeSet& ms, double t_x, double t_y) {
  Complex acc = 0.0;
  for (int k = 0; k < ms.size(); ++k)
    acc += ms.z(k) * std::exp(Complex(0, ms.omega(k) * (t_x - t_y)));
  return 2.0 * acc;
}

FieldAverage coherent_field_average(const ModeSet& ms, const CoherentSpec& alpha, int N, double t,
                                    const TruncationSpec& trunc) {
  State psi = coherent_state(ms, alpha, N, trunc);
  const SingleSpace sp(ms.size(), trunc.n_max);
  FieldAverage out;
  for (int s = 0; s < n_helicities; ++s) {
    Complex analytic = 0.0;
    for (int k = 0; k < ms.size(); ++k)
      analytic += ms.z(k) * alpha.alpha(k, s) * std::exp(Complex(0, -ms.omega(k) * t));
    out.analytic(s) = analytic;
    ModeAmplitudes f = ModeAmplitudes::Zero(ms.size(), n_helicities);
    for (int k = 0; k < ms.size(); ++k) f(k, s) = std::exp(Complex(0, ms.omega(k) * t));
    auto op = lift(psi.space, smeared_block(sp, ms, f, SmearKind::annihilate));
    out.numeric(s) = psi.amp.dot(op.apply(psi.amp)) / psi.amp.squaredNorm();
  }
  return out;
}

}  // namespace noncanon
