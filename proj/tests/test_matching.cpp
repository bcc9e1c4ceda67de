#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "flowconf/error.hpp"
#include "flowconf/experiment.hpp"
#include "flowconf/matching.hpp"
#include "flowconf/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace flowconf;

namespace {

FlowHash hash_with_distance(const FlowHash& base, int d) {
    FlowHash h = base;
    for (int i = 0; i < d; ++i) h.set_bit(i, !h.bit(i));
    return h;
}

std::vector<bool> bits(const FlowHash& h) {
    std::vector<bool> v;
    for (int i = 0; i < h.m(); ++i) v.push_back(h.bit(i));
    return v;
}

}  // namespace

TEST(Threshold, Examples) {
    const FlowHash a({0, 0}, 16);
    EXPECT_TRUE(threshold_match(a, a, 1));
    EXPECT_FALSE(threshold_match(a, a, 0));
    EXPECT_FALSE(threshold_match(a, hash_with_distance(a, 5), 5));
    EXPECT_TRUE(threshold_match(a, hash_with_distance(a, 5), 6));
    EXPECT_THROW(threshold_match(a, a, 17), UsageError);
    EXPECT_THROW(threshold_match(a, a, -1), UsageError);
}

TEST(Roc, EndpointsAndMonotone) {
    const int m = 32;
    Rng rng(3);
    std::vector<int> genuine, impostor;
    for (int i = 0; i < 200; ++i) {
        genuine.push_back(static_cast<int>(rng.below(10)));
        impostor.push_back(8 + static_cast<int>(rng.below(20)));
    }
    const auto curve = roc_from_distances(genuine, impostor, m);
    ASSERT_EQ(curve.size(), static_cast<std::size_t>(m + 1));
    EXPECT_EQ(curve.front().tpr, 0.0);
    EXPECT_EQ(curve.front().fpr, 0.0);
    EXPECT_EQ(curve.back().tpr, 1.0);
    EXPECT_EQ(curve.back().fpr, 1.0);
    for (std::size_t i = 1; i < curve.size(); ++i) {
        EXPECT_GE(curve[i].tpr, curve[i - 1].tpr);
        EXPECT_GE(curve[i].fpr, curve[i - 1].fpr);
    }
    const double auc = roc_auc(curve);
    EXPECT_GT(auc, 0.9);
    EXPECT_LE(auc, 1.0);
}

TEST(Roc, PerfectSeparationAndIdentity) {
    const std::vector<int> zero(10, 0), far(10, 20);
    const auto curve = roc_from_distances(zero, far, 20);
    EXPECT_EQ(curve[1].tpr, 1.0);
    EXPECT_EQ(curve[1].fpr, 0.0);
    EXPECT_DOUBLE_EQ(roc_auc(curve), 1.0);
    EXPECT_DOUBLE_EQ(roc_auc(roc_from_distances(far, far, 20)), 0.5);
}

TEST(Nearest, SelfAndSingleton) {
    Rng rng(2);
    std::vector<FlowHash> lib;
    for (int i = 0; i < 10; ++i) {
        FlowHash h({i / 2, i % 2}, 64);
        for (int b = 0; b < 64; ++b) h.set_bit(b, rng.bernoulli(0.5));
        lib.push_back(h);
    }
    const MatchOutcome self = nearest_match(lib[3], lib);
    EXPECT_EQ(self.kind, MatchKind::kPerfect);
    EXPECT_EQ(self.score, 0);
    EXPECT_EQ(self.matched_ids, std::vector<FlowId>{lib[3].id()});

    const std::vector<FlowHash> one{lib[7]};
    const MatchOutcome only = nearest_match(hash_with_distance(lib[0], 30), one);
    EXPECT_EQ(only.matched_ids, std::vector<FlowId>{lib[7].id()});
    EXPECT_EQ(only.kind, MatchKind::kMiss);

    const std::vector<FlowHash> sibling{lib[1]};
    EXPECT_EQ(nearest_match(lib[0], sibling).kind, MatchKind::kWebsite);
    EXPECT_THROW(nearest_match(lib[0], std::vector<FlowHash>{}), UsageError);
}

TEST(Nearest, AgreesWithBruteForce) {
    Rng rng(77);
    for (int inst = 0; inst < 50; ++inst) {
        const int m = 8 + static_cast<int>(rng.below(24));  // short hashes force ties
        const int n = 1 + static_cast<int>(rng.below(20));
        std::vector<FlowHash> lib;
        std::vector<std::pair<FlowId, std::vector<bool>>> ref;
        for (int i = 0; i < n; ++i) {
            FlowHash h({i % 4, i / 4}, m);
            for (int b = 0; b < m; ++b) h.set_bit(b, rng.bernoulli(0.5));
            lib.push_back(h);
            ref.emplace_back(h.id(), bits(h));
        }
        FlowHash q({static_cast<int>(rng.below(4)), 0}, m);
        for (int b = 0; b < m; ++b) q.set_bit(b, rng.bernoulli(0.5));
        const MatchOutcome got = nearest_match(q, lib);
        const std::set<FlowId> got_ids(got.matched_ids.begin(), got.matched_ids.end());
        EXPECT_EQ(got_ids, oracle::nearest(bits(q), ref));
    }
}

TEST(Scc, WindowCounts) {
    const std::vector<double> ts{0.0, 0.01, 0.06, 0.2};
    EXPECT_EQ(scc_window_counts(ts, 0.05), (std::vector<std::uint16_t>{2, 1, 0, 0, 1}));
    EXPECT_TRUE(scc_window_counts({}, 0.05).empty());
    EXPECT_THROW(scc_window_counts(ts, 0.0), UsageError);
}

TEST(Scc, SelfScoreIsSpan) {
    const Trace t = oracle::random_trace(9, 300, 0.02);
    for (double k : {0.01, 0.05, 0.5}) {
        const int span = static_cast<int>(std::floor(t.duration() / k)) + 1;
        EXPECT_EQ(scc_score(t, t, k), span);
    }
}

TEST(Scc, DisjointActivityScoresZero) {
    // Every window of equal-span flows differs in count.
    const std::vector<double> u{0.0, 0.0, 0.25, 0.25, 0.5, 0.5, 0.75};
    const std::vector<double> p{0.0, 0.25, 0.5, 0.75, 0.75};
    EXPECT_EQ(scc_score(u, p, 0.25), 0);
}

TEST(Scc, PaddedScoreCountsDummyFreeWindows) {
    const FlowSet flows = generate_synthetic_corpus(3, 3, {}, 4);
    ApConfig ap;
    ap.histograms = build_histograms(flows);
    ap.rate_scale = 3.0;
    Rng rng(6);
    const double k = 0.05;
    for (const auto& u : flows) {
        const Trace p = adaptive_pad(u, ap, rng);
        const auto span = static_cast<std::size_t>(std::floor(u.duration() / k)) + 1;
        std::vector<bool> has_dummy(span, false);
        for (const auto& pkt : p.packets())
            if (pkt.is_dummy) has_dummy[static_cast<std::size_t>(std::floor(pkt.timestamp / k))] = true;
        const int clean = static_cast<int>(std::count(has_dummy.begin(), has_dummy.end(), false));
        EXPECT_EQ(scc_score(u, p, k), clean);
        EXPECT_LT(clean, static_cast<int>(span));
    }
}

TEST(AdaptedScc, SelfIsPredicted) {
    const FlowSet flows = generate_synthetic_corpus(4, 3, {}, 8);
    ApConfig ap;
    ap.histograms = build_histograms(flows);
    ap.rate_scale = 3.0;
    SccIndex index(pad_flowset(flows, ap), {0.05});
    index.append(flows);
    for (const auto& u : flows) {
        const MatchOutcome o = adapted_scc(u, index);
        EXPECT_EQ(o.kind, MatchKind::kPerfect) << to_string(u.id());
        EXPECT_EQ(o.matched_ids, std::vector<FlowId>{u.id()});
    }
}

TEST(AdaptedScc, DirectionsMustAgree) {
    using testutil::make_trace;
    // Query outgoing windows (2,1), incoming windows (1,2).
    const Trace u = make_trace({0, 0}, {{0.0, 1}, {0.01, 1}, {0.02, -1}, {0.12, 1}, {0.13, -1}, {0.14, -1}});
    // Flow 3 copies the incoming side only; flow 7 the outgoing side only.
    const Trace f3 = make_trace({0, 3}, {{0.0, 1}, {0.02, -1}, {0.12, 1}, {0.13, -1}, {0.14, -1}, {0.15, 1}});
    const Trace f7 = make_trace({0, 7}, {{0.0, 1}, {0.01, 1}, {0.02, -1}, {0.03, -1}, {0.12, 1}, {0.13, -1}});
    const MatchOutcome o = adapted_scc(u, FlowSet({f3, f7}), {0.1});
    EXPECT_EQ(o.kind, MatchKind::kNoPrediction);
    EXPECT_TRUE(o.matched_ids.empty());
    EXPECT_EQ(o.score_in, 2);
    EXPECT_EQ(o.score_out, 2);
}

TEST(AdaptedScc, AgreesWithBruteForce) {
    Rng rng(5);
    for (int inst = 0; inst < 50; ++inst) {
        const int n = 1 + static_cast<int>(rng.below(20));
        std::vector<Trace> ts;
        for (int i = 0; i < n; ++i) {
            const Trace raw = oracle::random_trace(rng.next_u64(), 20 + static_cast<int>(rng.below(60)), 0.03);
            ts.push_back(Trace::normalize({i % 5, i / 5}, raw.packets()));
        }
        const FlowSet padded(ts);
        const double k = rng.uniform(0.02, 0.3);
        const Trace& pick = ts[rng.below(ts.size())];
        ImpairmentConfig jit{0.1, IpdvDistribution::parse("normal:0,0.02"), rng.next_u64()};
        const Trace query = impair(pick, jit);
        const MatchOutcome got = adapted_scc(query, padded, {k});
        const std::set<FlowId> got_ids(got.matched_ids.begin(), got.matched_ids.end());
        EXPECT_EQ(got_ids, oracle::adapted_scc(query, padded, k)) << "instance " << inst;
    }
}

TEST(AdaptedScc, SmallJitterTrend) {
    ExperimentConfig cfg;
    cfg.synthetic_sites = 6;
    cfg.synthetic_instances = 4;
    cfg.ipdv = "normal:0.021,0.01,-1.418,1.735";
    cfg.scc_windows = {0.05};
    cfg.scc_ipdv_means = {0.0, 0.021, 0.2};
    cfg.scc_self_inclusion = true;
    const ExperimentReport r = run_padded_experiment(cfg);
    ASSERT_EQ(r.padded.size(), 3u);
    const double zero = r.padded[0].summary.perfect_rate();
    const double small = r.padded[1].summary.perfect_rate();
    const double large = r.padded[2].summary.perfect_rate();
    EXPECT_EQ(zero, 1.0);
    EXPECT_GE(small, large);
    EXPECT_LE(r.padded[1].summary.false_match_rate(), 0.05);
}

TEST(Summary, Rates) {
    MatchSummary s;
    auto add = [&](MatchKind k) {
        MatchOutcome o;
        o.kind = k;
        s.add(o);
    };
    add(MatchKind::kPerfect);
    add(MatchKind::kPerfect);
    add(MatchKind::kWebsite);
    add(MatchKind::kMiss);
    add(MatchKind::kNoPrediction);
    EXPECT_DOUBLE_EQ(s.perfect_rate(), 0.4);
    EXPECT_DOUBLE_EQ(s.website_rate(), 0.6);
    EXPECT_DOUBLE_EQ(s.no_prediction_rate(), 0.2);
    EXPECT_DOUBLE_EQ(s.false_match_rate(), 0.5);
}

TEST(Reports, Format) {
    MatchOutcome o;
    o.query = {1, 2};
    o.kind = MatchKind::kWebsite;
    o.matched_ids = {{1, 3}, {1, 4}};
    o.score = 7;
    const std::string text = format_match_report({o}, "config_hash=abc");
    EXPECT_EQ(text, "# config_hash=abc\nquery_site,query_instance,outcome,matched_ids,score\n1,2,website,1-3;1-4,7\n");
    const std::string roc = format_roc({{0, 0.0, 0.0}, {1, 0.5, 0.25}});
    EXPECT_EQ(roc.substr(0, roc.find('\n')), "tau,tpr,fpr");
}
