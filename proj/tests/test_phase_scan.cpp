#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "test_support.hpp"

using namespace hhg2d;
using hhg2d::test::argon;
using hhg2d::test::lab_field;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> sample(const std::vector<double>& phis, auto&& f) {
  std::vector<double> v;
  for (double x : phis) v.push_back(f(x));
  return v;
}

// One scan shared by the tests that look at simulated series.
const PhaseScan& lab_scan() {
  static const PhaseScan scan = [] {
    const auto q = test::orders(16, 28);
    return run_scan(lab_field(0.12, 0.0), argon(), q, 64);
  }();
  return scan;
}

}  // namespace

TEST(PhaseGrid, UniformOverFullTurn) {
  const auto g = uniform_phase_grid(64);
  ASSERT_EQ(g.size(), 64u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_NEAR(g[1], 2.0 * kPi / 64, 1e-15);
  EXPECT_NEAR(g.back() + g[1], 2.0 * kPi, 1e-12);
  EXPECT_THROW(uniform_phase_grid(0), DomainError);
}

TEST(FourierFit, ExactTwoTermInputs) {
  const auto phis = uniform_phase_grid(32);
  const auto f = fourier_fit(sample(phis, [](double x) { return 2.0 + std::cos(x); }), phis);
  EXPECT_NEAR(f.a0, 2.0, 1e-10);
  EXPECT_NEAR(f.a1, 1.0, 1e-10);
  for (double c : {f.b1, f.a2, f.b2}) EXPECT_NEAR(c, 0.0, 1e-10);
  EXPECT_NEAR(f.rms, 0.0, 1e-10);
  EXPECT_FALSE(f.extended);

  const auto g = fourier_fit(sample(phis, [](double x) { return std::sin(2.0 * x); }), phis);
  EXPECT_NEAR(g.b2, 1.0, 1e-10);
  for (double c : {g.a0, g.a1, g.b1, g.a2}) EXPECT_NEAR(c, 0.0, 1e-10);
}

TEST(FourierFit, DegenerateGridsAreRejected) {
  const auto phis4 = uniform_phase_grid(4);
  const auto v4 = sample(phis4, [](double x) { return 1.0 + std::cos(x); });
  EXPECT_THROW(fourier_fit(v4, phis4), IllConditionedError);
  // Eight samples at only four distinct phases cannot fix five coefficients.
  std::vector<double> phis8, v8;
  for (int k = 0; k < 8; ++k) {
    phis8.push_back(phis4[static_cast<std::size_t>(k % 4)]);
    v8.push_back(v4[static_cast<std::size_t>(k % 4)]);
  }
  EXPECT_THROW(fourier_fit(v8, phis8), IllConditionedError);
  EXPECT_THROW(fourier_fit(v8, phis4), DomainError);
}

TEST(FourierFit, ExtendedModelRecoversBimodalSeries) {
  const auto phis = uniform_phase_grid(64);
  const auto v =
      sample(phis, [](double x) { return 1.0 + 0.2 * std::cos(2.0 * x) + 0.6 * std::cos(4.0 * x); });
  // On a uniform grid the least-squares coefficients are the discrete Fourier
  // projections.
  double proj2 = 0.0;
  for (std::size_t k = 0; k < phis.size(); ++k) proj2 += v[k] * std::cos(2.0 * phis[k]);
  proj2 *= 2.0 / static_cast<double>(phis.size());

  const auto two = fourier_fit(v, phis);
  EXPECT_GT(two.rms, 0.05 * two.peak_to_peak);
  const auto f = fit_modulation(v, phis);
  ASSERT_TRUE(f.extended);
  EXPECT_NEAR(f.a2, proj2, 1e-12);
  EXPECT_NEAR(f.a2, 0.2, 1e-12);
  EXPECT_NEAR(f.a4, 0.6, 1e-12);
  EXPECT_NEAR(f.a0, 1.0, 1e-12);
  EXPECT_NEAR(f.rms, 0.0, 1e-12);
}

TEST(AlignShift, RecoversKnownShifts) {
  const auto phis = uniform_phase_grid(64);
  ModulationFit ref;
  ref.a0 = 1.0;
  ref.a1 = 0.5;
  ref.b2 = 0.3;
  const auto same = sample(phis, [&](double x) { return ref(x); });
  EXPECT_NEAR(align_shift(ref, same, phis).tau, 0.0, 1e-6);
  const auto shifted = sample(phis, [&](double x) { return ref(x - 0.7); });
  const auto r = align_shift(ref, shifted, phis);
  EXPECT_NEAR(r.tau, 0.7, 1e-3);
  EXPECT_FALSE(r.degenerate);
}

TEST(AlignShift, NoisySeries) {
  const auto phis = uniform_phase_grid(64);
  ModulationFit ref;
  ref.a0 = 1.0;
  ref.a1 = 0.6;
  ref.b1 = 0.2;
  ref.a2 = 0.3;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> noise(0.0, 0.1 * 1.2);
  for (double tau : {0.3, 2.0, 4.4}) {
    const auto v = sample(phis, [&](double x) { return ref(x - tau) + noise(rng); });
    EXPECT_NEAR(align_shift(ref, v, phis).tau, tau, 0.05);
  }
}

TEST(AlignShift, ConstantSeriesIsDegenerate) {
  const auto phis = uniform_phase_grid(32);
  ModulationFit ref;
  ref.a0 = 1.0;
  ref.a2 = 0.4;
  const std::vector<double> flat(phis.size(), 1.0);
  const auto r = align_shift(ref, flat, phis);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.tau, 0.0);
  EXPECT_FALSE(r.warning.empty());
}

TEST(Modality, SyntheticShapes) {
  const auto phis = uniform_phase_grid(64);
  const auto mono = classify_modality(sample(phis, [](double x) { return 2.0 + std::cos(2.0 * x); }), phis);
  EXPECT_EQ(mono.modality, Modality::monomodal);
  EXPECT_EQ(mono.maxima_per_pi, 1);
  const auto bi = classify_modality(
      sample(phis, [](double x) { return 1.0 + 0.2 * std::cos(2.0 * x) + 0.6 * std::cos(4.0 * x); }),
      phis);
  EXPECT_EQ(bi.modality, Modality::bimodal);
  EXPECT_EQ(bi.maxima_per_pi, 2);
  // Crest exactly between two points of the internal evaluation grid.
  const double crest = kPi / 8192.0;
  const auto tie = classify_modality(
      sample(phis, [&](double x) { return 2.0 + std::cos(2.0 * (x - crest)); }), phis);
  EXPECT_EQ(tie.maxima_per_pi, 1);
}

TEST(Modality, RefusesConstantAndAperiodicSeries) {
  const auto phis = uniform_phase_grid(64);
  EXPECT_THROW(classify_modality(std::vector<double>(64, 3.0), phis), ClassificationRefused);
  EXPECT_THROW(classify_modality(sample(phis, [](double x) { return 2.0 + std::cos(x); }), phis),
               ClassificationRefused);
}

TEST(RunScan, RejectsCoarseGrid) {
  const std::vector<double> q{24.0};
  EXPECT_THROW(run_scan(lab_field(), argon(), q, 31), DomainError);
}

TEST(RunScan, SeriesArePiPeriodic) {
  const auto& scan = lab_scan();
  ASSERT_EQ(scan.phis.size(), 64u);
  EXPECT_TRUE(scan.gaps.empty());
  for (const auto& s : scan.series) {
    for (std::size_t j = 0; j < 32; ++j) {
      const double a = s.Itotal[j], b = s.Itotal[j + 32];
      EXPECT_LE(std::abs(a - b), 1e-8 * std::max(a, b)) << "q=" << s.q << " j=" << j;
    }
  }
}

TEST(RunScan, ParitySelectsPolarisation) {
  const auto& scan = lab_scan();
  const auto& h24 = scan.at(24.0);
  const auto& h25 = scan.at(25.0);
  for (std::size_t j = 0; j < scan.phis.size(); ++j) {
    EXPECT_LT(h24.Ix[j], 1e-12 * h24.Itotal[j]);
    EXPECT_LT(h25.Iy[j], 1e-12 * h25.Itotal[j]);
  }
}

TEST(RunScan, EvenOrdersAreBimodalOddMonomodal) {
  const auto& scan = lab_scan();
  EXPECT_EQ(classify_modality(scan.at(24.0).Itotal, scan.phis).modality, Modality::bimodal);
  EXPECT_EQ(classify_modality(scan.at(25.0).Itotal, scan.phis).modality, Modality::monomodal);
  // H14 and H16 sit at the low end of the plateau, where the second hump of
  // the even orders is only a shoulder.
  for (int q = 18; q <= 26; q += 2) {
    const int even = classify_modality(scan.at(q).Itotal, scan.phis).maxima_per_pi;
    const int odd = classify_modality(scan.at(q + 1).Itotal, scan.phis).maxima_per_pi;
    EXPECT_GT(even, odd) << "q=" << q;
  }
}

TEST(RunScan, OrbitAxesAreSignContinuous) {
  const auto& scan = lab_scan();
  ASSERT_FALSE(scan.orbits.empty());
  int series_checked = 0;
  for (const auto& o : scan.orbits) {
    if (o.half_cycle != 0) continue;
    const EllipseDecomposition* prev = nullptr;
    for (const auto& e : o.axes) {
      if (!e) continue;
      if (prev) {
        EXPECT_LE((e->M - prev->M).norm(), (e->M + prev->M).norm())
            << "q=" << o.q << " orbit " << o.orbit_id;
      }
      prev = &*e;
    }
    ++series_checked;
  }
  EXPECT_GT(series_checked, 0);
}

TEST(RunScan, PartnerOrbitAxesFollowParity) {
  const auto& scan = lab_scan();
  int checked = 0;
  for (const auto& a : scan.orbits) {
    if (a.half_cycle != 0) continue;
    for (const auto& b : scan.orbits) {
      if (b.q != a.q || b.half_cycle != 1 || b.family != a.family) continue;
      const double s = static_cast<int>(a.q) % 2 == 0 ? 1.0 : -1.0;
      for (std::size_t j = 0; j < a.axes.size(); ++j) {
        if (!a.axes[j] || !b.axes[j]) continue;
        const double m = a.axes[j]->M.norm();
        if (std::abs(b.axes[j]->M.norm() - m) > 1e-8 * m) continue;  // not the mirror orbit
        EXPECT_NEAR(b.axes[j]->M.x, -s * a.axes[j]->M.x, 1e-8 * m);
        EXPECT_NEAR(b.axes[j]->M.y, s * a.axes[j]->M.y, 1e-8 * m);
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 100);
}
