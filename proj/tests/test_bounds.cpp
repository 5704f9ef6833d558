#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "resform/bounds.hpp"
#include "resform/exits.hpp"
#include "resform/generators.hpp"

using namespace resform;

namespace {

FluctuationModel uniform_model(double alpha, double r_min, double r_max) {
    FluctuationModel m;
    m.alpha = alpha;
    m.family = EnvelopeFamily::Uniform;
    m.beta_u = alpha;
    m.beta_l = alpha;
    m.r_min = r_min;
    m.r_max = r_max;
    m.r_ref = r_max;
    m.r0 = r_max;
    return m;
}

FluctuationModel poly_model(double alpha, double delta, double r_min,
                            double r_max) {
    FluctuationModel m = uniform_model(alpha, r_min, r_max);
    m.family = EnvelopeFamily::Polynomial;
    m.delta = delta;
    m.b = delta;
    m.eps = delta;
    return m;
}

struct Instance {
    MeasuredNetwork net;
    ResistanceMetric metric;
    VolumeProfile profile;
    FluctuationModel model;
    ScaleFunctions scale;
    ExponentSet exps;
    SpectralDecomposition dec;
};

Instance make_instance(MeasuredNetwork net, EnvelopeFamily family) {
    ResistanceMetric metric = resistance_metric(net);
    VolumeProfile profile = volume_profile(net, metric);
    FluctuationModel model = fit_model(profile, family);
    ScaleFunctions scale = eval_scale(model);
    ExponentSet exps = derive_exponents(model, BoundMode::OnDiag, 0.05,
                                        ExponentPolicy::Slack, true);
    SpectralDecomposition dec = spectral_decompose(net);
    return {std::move(net), std::move(metric), std::move(profile),
            std::move(model), std::move(scale), std::move(exps),
            std::move(dec)};
}

} // namespace

TEST_CASE("reference exponents at alpha=2, delta=0") {
    FluctuationModel m = uniform_model(2.0, 0.1, 10.0);
    ExponentSet e = derive_exponents(m, BoundMode::OffDiag, 0.05,
                                     ExponentPolicy::Reference);
    CHECK(e.gamma1 == 7.0);
    CHECK(e.theta1 == 64.0);
    CHECK(e.theta3 == 14.0);
    CHECK(e.theta2 == doctest::Approx(128.0).epsilon(1e-14));
    CHECK(e.gamma2 == doctest::Approx(25.0).epsilon(1e-14));
    CHECK_FALSE(e.clamped);
}

TEST_CASE("reference theta2 matches the closed form in delta") {
    const double alpha = 2.0;
    for (double delta : {0.0, 1e-4, 1e-3}) {
        FluctuationModel m = poly_model(alpha, delta, 0.1, 10.0);
        ExponentSet e = derive_exponents(m, BoundMode::OffDiag, 0.05,
                                         ExponentPolicy::Reference);
        double closed = 4.0 * std::pow(2.0 + alpha, 3.0) /
                        (alpha - 8.0 * delta * (2.0 + alpha) * (2.0 + alpha));
        CHECK(e.theta1 == 4.0 * (2.0 + alpha) * (2.0 + alpha));
        CHECK(std::abs(e.theta2 - closed) <= 1e-9 * closed);
    }
}

TEST_CASE("slack policy sits five percent above the strict lower bounds") {
    FluctuationModel m = poly_model(1.0, 0.01, 0.1, 10.0);
    ExponentSet e = derive_exponents(m, BoundMode::OnDiag, 0.05);
    CHECK(e.theta1 == doctest::Approx(e.theta1_lower * 1.05).epsilon(1e-12));
    CHECK(e.theta2 == doctest::Approx(e.theta2_lower * 1.05).epsilon(1e-12));
    CHECK(e.theta1_lower ==
          doctest::Approx(e.gamma1 * (2.0 + e.beta_u) /
                          (1.0 - 2.0 * e.b * e.gamma1)).epsilon(1e-12));
    CHECK(e.theta3 == doctest::Approx(e.gamma1 * (1.0 + 2.0 / e.beta_l)));
    CHECK(e.gamma2 > 0.0);
}

TEST_CASE("feasibility caps on the fluctuation exponents") {
    // OnDiag cap: 1/(4(2+beta_u)); with alpha=1 that is 1/12.
    FluctuationModel bad = poly_model(1.0, 0.1, 0.1, 10.0);
    CHECK_THROWS_AS(derive_exponents(bad, BoundMode::OnDiag), InfeasibleError);
    ExponentSet clamped = derive_exponents(bad, BoundMode::OnDiag, 0.05,
                                           ExponentPolicy::Slack, true);
    CHECK(clamped.clamped);
    CHECK(clamped.b < clamped.cap);
    CHECK(clamped.b_model == 0.1);
    // OffDiag cap is tighter: beta_l/(8(2+beta_u)^2) = 1/72.
    FluctuationModel edge = poly_model(1.0, 0.05, 0.1, 10.0);
    CHECK_NOTHROW(derive_exponents(edge, BoundMode::OnDiag));
    CHECK_THROWS_AS(derive_exponents(edge, BoundMode::OffDiag), InfeasibleError);
    // JSON emitter covers every field.
    auto j = nlohmann::ordered_json::parse(exponents_to_json_text(clamped));
    CHECK(j["clamped"] == true);
    CHECK(j["theta1"].get<double>() > 0);
    CHECK(j["mode"] == "ondiag");
}

TEST_CASE("time grid spans h of the window and the decade helpers clamp") {
    ScaleFunctions s = eval_scale(uniform_model(1.0, 0.5, 20.0));
    std::vector<double> grid = time_grid(s);
    CHECK(grid.size() == 40);
    CHECK(s.h_inv(grid.front()) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s.h_inv(grid.back()) == doctest::Approx(10.0).epsilon(1e-12));
    for (size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);
    TimeWindow mid = middle_decade(grid);
    CHECK(mid.lo >= grid.front());
    CHECK(mid.hi <= grid.back());
    CHECK(std::log10(mid.hi / mid.lo) == doctest::Approx(1.0).epsilon(1e-9));
    TimeWindow low = lowest_decade(grid);
    CHECK(low.lo == grid.front());
    CHECK(low.hi == doctest::Approx(grid.front() * 10.0));
}

TEST_CASE("chain counts grow as t shrinks and tiny windows error out") {
    auto net = gen_path(33);
    ResistanceMetric m = resistance_metric(net);
    FluctuationModel model = uniform_model(1.0, 1.0, 16.0);
    ScaleFunctions s = eval_scale(model);
    ExponentSet e = derive_exponents(model, BoundMode::OffDiag, 0.05,
                                     ExponentPolicy::Reference);
    // R(0,32) = 32, h^{-1}(t) = sqrt(t), g = 1: one hop suffices once
    // sqrt(t) >= 32, i.e. t >= 1024.
    ChainPlan big = chain_count(m, s, e, 0, 32, 2000.0);
    CHECK(big.N == 1);
    ChainPlan mid = chain_count(m, s, e, 0, 32, 200.0);
    CHECK(mid.N > big.N);
    CHECK(mid.chain.front() == 0);
    CHECK(mid.chain.back() == 32);
    CHECK(static_cast<int>(mid.chain.size()) == mid.N + 1);
    for (double seg : mid.segment_resistances) CHECK(seg > 0.0);
    CHECK_THROWS_AS(chain_count(m, s, e, 0, 32, 1e-9), WindowError);
}

TEST_CASE("on-diagonal certificate on the path: holds with modest spread") {
    Instance inst = make_instance(gen_path(51), EnvelopeFamily::Uniform);
    Certificate c = certify_ondiag(inst.dec, inst.scale, inst.exps);
    CHECK(c.verdict == "holds");
    CHECK(c.constants.at("c1") > 0);
    CHECK(c.constants.at("c2") >= c.constants.at("c1") * 0.0);
    CHECK(c.constants.at("spread") <= 50.0);
    CHECK(c.metrics.at("slope_mid_decade") ==
          doctest::Approx(-0.5).epsilon(0.2));
    CHECK(c.metrics.at("slope_prediction") ==
          doctest::Approx(-inst.model.alpha / (1 + inst.model.alpha)));
    // The JSON text parses and exposes the schema fields.
    auto j = nlohmann::ordered_json::parse(certificate_to_json_text(c));
    CHECK(j["bound_id"] == "ondiag");
    CHECK(j["witnesses"].is_array());
    CHECK(j["constants"]["c1"].is_number());
}

TEST_CASE("on-diagonal certificate on the two-state toy with a narrow window") {
    auto net = gen_two_state(1.0, 1.0, 1.0);
    SpectralDecomposition dec = spectral_decompose(net);
    FluctuationModel m = uniform_model(1.0, 0.15, 1.0); // R(a,b) = 1
    ScaleFunctions s = eval_scale(m);
    ExponentSet e = derive_exponents(m, BoundMode::OnDiag);
    Certificate c = certify_ondiag(dec, s, e);
    CHECK(c.verdict == "holds");
    CHECK(c.constants.at("spread") >= 1.0);
    CHECK(c.constants.at("spread") <= 5.0);
}

TEST_CASE("exit-tail certificate on the path") {
    Instance inst = make_instance(gen_path(51), EnvelopeFamily::Uniform);
    Certificate c = certify_exit_tail(inst.net, inst.metric, inst.scale,
                                      inst.exps);
    CHECK(c.verdict == "holds");
    CHECK(c.constants.at("c1") == 2.0);
    CHECK(c.constants.at("c2_q") > 0.0);
    CHECK(c.constants.at("c2_V") > 0.0);
    CHECK(c.constants.at("c_q") > 0.0);
    CHECK(c.constants.at("c_q") <= 0.5 * 0.5 / 64.0 * 1.0001);
    CHECK(c.constants.at("sandwich_spread") <= 50.0);
    CHECK(c.metrics.at("balls") > 0);
    CHECK(c.metrics.at("min_escape_ratio") > 0.0);
    CHECK(c.metrics.at("min_escape_ratio") <= 1.0 + 1e-9);
}

TEST_CASE("near-diagonal certificate: adjacent pairs qualify on a long path") {
    Instance inst = make_instance(gen_path(101), EnvelopeFamily::Uniform);
    Certificate c = certify_neardiag(inst.dec, inst.metric, inst.scale,
                                     inst.exps);
    CHECK(c.verdict == "holds");
    CHECK(c.metrics.at("qualifying_pairs") > 0);
    CHECK(c.constants.at("half_rule_violations") == 0);
    CHECK(c.constants.at("c_prime") > 0.0);
}

TEST_CASE("off-diagonal certificate on the path: shape tracks the exponent") {
    Instance inst = make_instance(gen_path(101), EnvelopeFamily::Uniform);
    ChainingReport cc = probe_chaining(inst.net, inst.metric);
    REQUIRE(cc.pass);
    ExponentSet e = derive_exponents(inst.model, BoundMode::OffDiag, 0.05,
                                     ExponentPolicy::Slack, true);
    Certificate c = certify_offdiag(inst.dec, inst.metric, inst.scale, e, cc);
    CHECK(c.verdict == "holds");
    CHECK(c.constants.at("c1_upper") > 0);
    CHECK(c.constants.at("c2_upper") > 0);
    CHECK(c.constants.at("c3_lower") > 0);
    CHECK(c.constants.at("c4_lower") >= 0);
    // Gaussian-type decay in (R^{1+alpha}/t)^{1/alpha}: strong anticorrelation.
    CHECK(c.metrics.at("shape_correlation") <= -0.98);
    CHECK(c.metrics.at("shape_points") >= 8);
}

TEST_CASE("off-diagonal lower bound is skipped when chaining fails") {
    Instance inst = make_instance(gen_path(51), EnvelopeFamily::Uniform);
    ChainingReport cc;
    cc.pass = false;
    ExponentSet e = derive_exponents(inst.model, BoundMode::OffDiag, 0.05,
                                     ExponentPolicy::Slack, true);
    Certificate c = certify_offdiag(inst.dec, inst.metric, inst.scale, e, cc);
    CHECK(c.verdict == "holds"); // upper bound alone
    CHECK(std::isnan(c.constants.at("c3_lower")));
    bool noted = false;
    for (const auto& n : c.notes)
        if (n.find("chaining probe failed") != std::string::npos) noted = true;
    CHECK(noted);
}

TEST_CASE("fluctuation certificate: uniform family is degenerate") {
    Instance inst = make_instance(gen_path(51), EnvelopeFamily::Uniform);
    Certificate c = certify_fluctuations(inst.dec, inst.profile, inst.scale,
                                         inst.exps);
    CHECK(c.verdict == "hypotheses_not_met");
}

TEST_CASE("fluctuation certificate on the two-weighted tree") {
    // w1 = 0.7: at 0.75 the depth-7 tree's envelope spread pushes the
    // g^theta1 lower-bound constant past the top of double range.
    Instance inst = make_instance(gen_two_weighted_tree(7, 0.7),
                                  EnvelopeFamily::Polynomial);
    Certificate c = certify_fluctuations(inst.dec, inst.profile, inst.scale,
                                         inst.exps);
    CHECK(c.verdict == "holds");
    for (const char* key : {"inf_gtheta_lo", "inf_gtheta_hi", "inf_hu_lo",
                            "inf_hu_hi", "sup_hl_lo", "sup_hl_hi"}) {
        CHECK(c.constants.at(key) > 0.0);
        CHECK(std::isfinite(c.constants.at(key)));
    }
    CHECK(c.constants.at("separation_hi") >= c.constants.at("separation_lo"));
    CHECK(c.constants.at("separation_lo") >= 1.0);
    CHECK(c.metrics.at("envelope_spread_rmin") > 1.0);
}

TEST_CASE("local certificate at the path midpoint") {
    Instance inst = make_instance(gen_path(101), EnvelopeFamily::Uniform);
    Certificate c = certify_local(inst.net, inst.dec, inst.metric, inst.profile,
                                  50, inst.scale);
    CHECK(c.verdict == "holds");
    CHECK(c.metrics.at("rescond_min") >= 0.02);
    CHECK(c.constants.at("local_hl_lo") > 0.0);
    CHECK(std::isfinite(c.constants.at("local_hu_hi")));
}
