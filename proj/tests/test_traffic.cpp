#include <doctest.h>

#include <random>
#include <sstream>

#include "iotac/errors.hpp"
#include "iotac/traffic.hpp"
#include "oracles.hpp"

using namespace iotac;

namespace {

std::vector<PacketRecord> random_labeled(std::mt19937_64& rng, std::size_t n) {
    auto recs = oracle::random_packets(rng, n, {"10.0.0.1", "10.0.0.2", "192.168.1.7", "fe80::1"});
    std::uniform_int_distribution<int> lab(0, 2);
    for (auto& r : recs) {
        const int l = lab(rng);
        if (l == 1) r.label = Label::benign;
        if (l == 2) {
            r.label = Label::attack;
            r.attack_type = "syn_flood";
        }
    }
    return recs;
}

} // namespace

TEST_CASE("three-row trace loads in order") {
    std::istringstream in("timestamp_us,src,dst,size_bytes,label,attack_type\n"
                          "0,a,b,100,0,\n10,a,b,200,1,mirai\n20,b,a,50,,\n");
    const auto t = parse_trace(in, "t");
    REQUIRE(t.records.size() == 3);
    CHECK(t.records[1].timestamp_us == 10);
    CHECK(t.records[1].label == Label::attack);
    CHECK(t.records[1].attack_type == "mirai");
    CHECK_FALSE(t.records[2].label.has_value());
}

TEST_CASE("malformed size names its line") {
    std::istringstream in("timestamp_us,src,dst,size_bytes,label,attack_type\n0,a,b,100,0,\n5,a,b,abc,0,\n");
    try {
        parse_trace(in);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("size_bytes") != std::string::npos);
    }
}

TEST_CASE("wrong header and wrong field count are parse errors") {
    std::istringstream bad_header("ts,src,dst,size\n");
    CHECK_THROWS_AS(parse_trace(bad_header), ParseError);
    std::istringstream short_row("timestamp_us,src,dst,size_bytes,label,attack_type\n0,a,b,1\n");
    CHECK_THROWS_AS(parse_trace(short_row), ParseError);
    std::istringstream neg("timestamp_us,src,dst,size_bytes,label,attack_type\n0,a,b,-4,0,\n");
    CHECK_THROWS_AS(parse_trace(neg), ParseError);
}

TEST_CASE("out-of-order timestamps: strict rejects, stable sort keeps tie order") {
    const std::string text = "timestamp_us,src,dst,size_bytes,label,attack_type\n"
                             "30,a,b,1,0,\n10,a,b,2,0,\n10,a,b,3,0,\n20,a,b,4,0,\n";
    std::istringstream strict(text);
    CHECK_THROWS_AS(parse_trace(strict, "", OrderPolicy::strict), OrderError);
    std::istringstream sorted(text);
    const auto t = parse_trace(sorted, "", OrderPolicy::stable_sort);
    std::vector<std::uint64_t> sizes;
    for (const auto& r : t.records) sizes.push_back(r.size_bytes);
    CHECK(sizes == std::vector<std::uint64_t>{2, 3, 4, 1});
}

TEST_CASE("save then load is the identity on 100 random records, and bytes round-trip") {
    std::mt19937_64 rng(11);
    Trace t{"r", random_labeled(rng, 100)};
    std::ostringstream out;
    write_trace(t, out);
    std::istringstream in(out.str());
    const auto back = parse_trace(in);
    CHECK(back.records == t.records);
    std::ostringstream again;
    write_trace(back, again);
    CHECK(again.str() == out.str());
}

TEST_CASE("property: trace round-trip over 100 random traces") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::size_t> len(0, 60);
    for (int c = 0; c < 100; ++c) {
        Trace t{"p", random_labeled(rng, len(rng))};
        std::ostringstream out;
        write_trace(t, out);
        std::istringstream in(out.str());
        const auto back = parse_trace(in);
        REQUIRE(back.records == t.records);
        for (std::size_t i = 1; i < back.records.size(); ++i) {
            REQUIRE(back.records[i - 1].timestamp_us <= back.records[i].timestamp_us);
        }
    }
}

TEST_CASE("feature dataset loading") {
    std::istringstream two("f1,f2,f3,f4,label,attack_type\n1,2,3,4,0,normal\n5,6,7,8,1,smurf\n");
    const auto rows = parse_feature_dataset(two);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].features.size() == 4);
    CHECK(rows[1].features[2] == 7.0);
    CHECK(rows[1].label == Label::attack);
    CHECK(rows[1].attack_type == "smurf");

    std::istringstream unlabeled("a,b,label\n1,2,\n");
    const auto u = parse_feature_dataset(unlabeled);
    REQUIRE(u.size() == 1);
    CHECK_FALSE(u[0].label.has_value());

    std::istringstream ragged("f1,f2,label\n1,2,0\n1,2,3,0\n");
    CHECK_THROWS_AS(parse_feature_dataset(ragged), DimensionError);
}

TEST_CASE("synth: benign 10 pkt/s for 10 s, seed 7") {
    SynthSpec spec;
    spec.duration_s = 10.0;
    spec.flows = {BenignFlow{"10.0.0.1", "10.0.0.2", 10.0, {}}};
    const auto a = synth_trace(spec, 7);
    const auto b = synth_trace(spec, 7);
    CHECK(a.records == b.records);
    CHECK(a.records.size() > 60);
    CHECK(a.records.size() < 140);
    for (const auto& r : a.records) CHECK(r.label == Label::benign);
    CHECK(synth_trace(spec, 8).records != a.records);
}

TEST_CASE("synth: 100x attack segment has mean inter-arrival near 1 ms") {
    SynthSpec spec;
    spec.duration_s = 20.0;
    spec.flows = {BenignFlow{"10.0.0.1", "10.0.0.2", 10.0, {}}};
    AttackSegment seg;
    seg.start_s = 5.0;
    seg.end_s = 15.0;
    seg.rate_multiplier = 100.0;
    spec.attacks = {seg};
    const auto t = synth_trace(spec, 3);
    std::vector<std::int64_t> ts;
    for (const auto& r : t.records) {
        if (r.label == Label::attack) {
            ts.push_back(r.timestamp_us);
            CHECK(r.timestamp_us >= 5'000'000);
            CHECK(r.timestamp_us < 15'000'000);
        }
    }
    REQUIRE(ts.size() > 1000);
    const double mean_gap_s = static_cast<double>(ts.back() - ts.front()) / static_cast<double>(ts.size() - 1) / 1e6;
    CHECK(mean_gap_s == doctest::Approx(1e-3).epsilon(0.05));
}

TEST_CASE("synth: empty duration is an error, no segments means all benign") {
    SynthSpec spec;
    spec.duration_s = 0.0;
    CHECK_THROWS_AS(synth_trace(spec, 1), ConfigError);
    spec.duration_s = 5.0;
    for (const auto& r : synth_trace(spec, 1).records) CHECK(r.label == Label::benign);
}

TEST_CASE("property: synth is a pure function of (spec, seed)") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> rate(1.0, 30.0);
    std::uniform_real_distribution<double> dur(0.5, 4.0);
    for (int c = 0; c < 100; ++c) {
        SynthSpec spec;
        spec.duration_s = dur(rng);
        spec.flows = {BenignFlow{"h1", "h2", rate(rng), {}}, BenignFlow{"h2", "h3", rate(rng), {}}};
        spec.rate_ramp = 1.0 + static_cast<double>(c % 3);
        if (c % 2) {
            AttackSegment a;
            a.start_s = 0.1;
            a.end_s = 0.3;
            a.rate_multiplier = 5.0;
            spec.attacks = {a};
        }
        const auto seed = rng();
        const auto a = synth_trace(spec, seed);
        const auto b = synth_trace(spec, seed);
        REQUIRE(a.records == b.records);
        for (std::size_t i = 1; i < a.records.size(); ++i) {
            REQUIRE(a.records[i - 1].timestamp_us <= a.records[i].timestamp_us);
        }
    }
}

TEST_CASE("synth spec JSON round-trip") {
    SynthSpec spec;
    spec.duration_s = 3.5;
    spec.rate_ramp = 2.0;
    AttackSegment a;
    a.start_s = 1.0;
    a.end_s = 2.0;
    spec.attacks = {a};
    const nlohmann::json j = spec;
    const auto back = j.get<SynthSpec>();
    CHECK(synth_trace(back, 4).records == synth_trace(spec, 4).records);
}
