#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"

using namespace hhg2d;
using hhg2d::test::argon;
using hhg2d::test::lab_field;

namespace {

constexpr double kPi = std::numbers::pi;

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i] / n;
    mb += b[i] / n;
  }
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

double total(const OracleRow& r) { return r.I.Itotal; }

}  // namespace

TEST(OracleConfig, Validation) {
  OracleConfig c;
  EXPECT_NO_THROW(c.validate());
  c.steps_per_cycle = 399;
  EXPECT_THROW(c.validate(), DomainError);
  c = {};
  c.tau_max = 1.1;
  EXPECT_THROW(c.validate(), DomainError);
  c = {};
  c.eps = 0.0;
  EXPECT_THROW(c.validate(), DomainError);
  c = {};
  c.tr_window = 0;
  EXPECT_THROW(c.validate(), DomainError);
}

TEST(DirectDipole, NyquistGuard) {
  OracleConfig c;
  c.steps_per_cycle = 400;
  const auto p = lab_field();
  // q w dt = 2 pi q / 400 exceeds 1/2 above q = 31.8.
  const std::vector<double> ok{31.0};
  const std::vector<double> bad{35.0};
  EXPECT_NO_THROW(direct_dipole(p, argon(), c, ok));
  EXPECT_THROW(direct_dipole(p, argon(), c, bad), ResolutionError);
}

TEST(DirectDipole, MonochromaticEvenOrdersVanish) {
  const auto rows = direct_dipole(lab_field(0.0), argon(), OracleConfig{}, test::orders(13, 30));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].Dy, cplx(0.0));
    if (static_cast<int>(rows[i].q) % 2 != 0) continue;
    const double neighbour = std::max(std::abs(rows[i - 1].Dx), std::abs(rows[i + 1].Dx));
    EXPECT_LT(std::abs(rows[i].Dx), 1e-6 * neighbour) << "q=" << rows[i].q;
  }
}

TEST(DirectDipole, PhasePeriodicity) {
  const auto q = test::orders(14, 34);
  for (double phi : {0.4, 2.2}) {
    const auto a = direct_dipole(lab_field(0.12, phi), argon(), OracleConfig{}, q);
    const auto b = direct_dipole(lab_field(0.12, phi + kPi), argon(), OracleConfig{}, q);
    for (std::size_t i = 0; i < q.size(); ++i) {
      EXPECT_LE(std::abs(total(a[i]) - total(b[i])), 1e-6 * std::max(total(a[i]), total(b[i])))
          << "phi=" << phi << " q=" << q[i];
    }
  }
}

TEST(DirectDipole, AgreesWithSaddleSpectrumShape) {
  const auto q = test::orders(15, 27);
  for (double phi : {0.0, kPi / 2}) {
    const auto p = lab_field(0.12, phi);
    const auto direct = direct_dipole(p, argon(), OracleConfig{}, q);
    const auto spec = spectrum(p, argon(), q);
    std::vector<double> a, b;
    for (std::size_t i = 0; i < q.size(); ++i) {
      a.push_back(std::log10(total(direct[i])));
      b.push_back(std::log10(spec.rows[i].I.Itotal));
    }
    EXPECT_GE(pearson(a, b), 0.9) << "phi=" << phi;
  }
}

TEST(DirectDipole, Converged) {
  const auto p = lab_field(0.12, 0.0);
  const auto q = test::orders(17, 27);
  OracleConfig base;
  const auto ref = direct_dipole(p, argon(), base, q);
  OracleConfig fine = base;
  fine.steps_per_cycle *= 2;
  const auto half_dt = direct_dipole(p, argon(), fine, q);
  for (double eps_scale : {0.5, 2.0}) {
    OracleConfig e = base;
    e.eps *= eps_scale;
    const auto r = direct_dipole(p, argon(), e, q);
    for (std::size_t i = 0; i < q.size(); ++i) {
      EXPECT_LT(std::abs(total(r[i]) / total(ref[i]) - 1.0), 0.05)
          << "eps x" << eps_scale << " q=" << q[i];
    }
  }
  for (std::size_t i = 0; i < q.size(); ++i) {
    EXPECT_LT(std::abs(total(half_dt[i]) / total(ref[i]) - 1.0), 0.05) << "q=" << q[i];
  }
}

TEST(WindowedDipole, BandsAddUp) {
  const auto p = lab_field(0.12, 1.0);
  OracleConfig c;
  const double T = p.period();
  const double top = c.tau_max * T;
  const std::vector<double> qs{22.0};
  const auto full = direct_dipole(p, argon(), c, qs).front();
  const Vec2c whole{full.Dx, full.Dy};
  for (double taper : {0.0, 0.3 * T}) {
    const auto a = windowed_dipole(p, argon(), c, 22.0, {0.0, 0.4 * T, taper});
    const auto b = windowed_dipole(p, argon(), c, 22.0, {0.4 * T, 0.9 * T, taper});
    const auto d = windowed_dipole(p, argon(), c, 22.0, {0.9 * T, top, taper});
    EXPECT_LT((a + b + d - whole).norm(), 1e-10 * whole.norm()) << "taper " << taper;
  }
  const auto empty = windowed_dipole(p, argon(), c, 22.0, {0.5 * T, 0.5 * T});
  EXPECT_EQ(empty.norm(), 0.0);
  EXPECT_THROW(windowed_dipole(p, argon(), c, 22.0, {0.6 * T, 0.5 * T}), DomainError);
  EXPECT_THROW(windowed_dipole(p, argon(), c, 22.0, {0.0, 2.0 * top}), DomainError);
}

TEST(WindowedDipole, TaperedBandsPartitionExactly) {
  TauBand lo{0.0, 50.0, 30.0}, hi{50.0, 1e9, 30.0};
  for (double t = 0.5; t < 200.0; t += 0.37) {
    EXPECT_NEAR(lo.weight(t) + hi.weight(t), 1.0, 1e-15);
    EXPECT_GE(lo.weight(t), 0.0);
    EXPECT_LE(lo.weight(t), 1.0);
  }
  EXPECT_EQ(lo.weight(34.9), 1.0);
  EXPECT_EQ(lo.weight(65.1), 0.0);
  EXPECT_NEAR(lo.weight(50.0), 0.5, 1e-15);
}

// The short band is split from the long one between the two excursions with a
// wide taper. Each saddle term is weighted by the band at its excursion time.
// Only phases near zero are asserted: towards phi = 2 the two short half-cycle
// terms nearly cancel and the band ratio grows past five.
TEST(WindowedDipole, ShortBandMatchesWeightedSaddles) {
  OracleConfig c;
  for (double phi : {0.0, 0.5}) {
    const auto p = lab_field(0.12, phi);
    const double T = p.period();
    const TauBand band{0.0, 0.62 * T, 0.4 * T};
    const auto q = test::orders(18, 24);
    const auto spec = spectrum(p, argon(), q);
    for (std::size_t i = 0; i < q.size(); ++i) {
      Vec2c weighted{};
      for (const auto& ct : spec.rows[i].dipole.contributions) {
        weighted += ct.total * cplx(band.weight(ct.saddle.excursion().real()));
      }
      const auto w = windowed_dipole(p, argon(), c, q[i], band);
      const double ratio = w.norm() / weighted.norm();
      EXPECT_GT(ratio, 0.5) << "phi=" << phi << " q=" << q[i];
      EXPECT_LT(ratio, 2.0) << "phi=" << phi << " q=" << q[i];
    }
  }
}
