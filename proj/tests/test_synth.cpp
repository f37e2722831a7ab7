#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "kineme/synth.hpp"

using namespace kineme;

TEST_SUITE_BEGIN("synth");

namespace {

double path_length(const AngleSeries& s) {
    double acc = 0.0;
    for (int t = 1; t < s.rows(); ++t) {
        for (int axis = 0; axis < 3; ++axis) {
            acc += std::abs(s.samples(t, axis) - s.samples(t - 1, axis));
        }
    }
    return acc;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<int> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](int x, int y) { return v[static_cast<std::size_t>(x)] < v[static_cast<std::size_t>(y)]; });
        std::vector<double> r(v.size());
        for (std::size_t p = 0; p < idx.size(); ++p) r[static_cast<std::size_t>(idx[p])] = static_cast<double>(p);
        return r;
    };
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const double n = static_cast<double>(a.size());
    const double mean = (n - 1.0) / 2.0;
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (ra[i] - mean) * (rb[i] - mean);
        da += (ra[i] - mean) * (ra[i] - mean);
        db += (rb[i] - mean) * (rb[i] - mean);
    }
    return num / std::sqrt(da * db);
}

}  // namespace

TEST_CASE("generated corpora satisfy the canonical series invariants") {
    GeneratorSpec spec;
    spec.videos_per_class = 4;
    spec.seed = 5;
    const SynthCorpus corpus = generate_corpus(spec);
    REQUIRE(corpus.series.size() == 8);
    REQUIRE(corpus.manifest.records.size() == 8);
    for (std::size_t i = 0; i < corpus.series.size(); ++i) {
        const auto& s = corpus.series[i];
        CHECK(s.rows() == 3000);
        CHECK(s.sample_rate_hz == 10.0);
        CHECK(s.samples.minCoeff() >= 0.0);
        CHECK(s.samples.maxCoeff() < 360.0);
        const auto& r = corpus.manifest.records[i];
        CHECK(r.video_id == s.video_id);
        CHECK(r.scale == Scale::QidsSr);
        CHECK(r.raw_score >= 0);
        CHECK(r.raw_score <= 27);
        const BinaryLabel expect =
            r.raw_score > spec.label_threshold ? BinaryLabel::High : BinaryLabel::Low;
        CHECK(r.binary_label == expect);
    }
}

TEST_CASE("zero amplitude, noise and pauses collapse to a constant 180 series") {
    GeneratorSpec spec;
    spec.videos_per_class = 1;
    spec.amplitude_jitter = 0.0;
    for (ClassMotionParams* p : {&spec.low, &spec.high}) {
        p->amplitude_deg = 0.0;
        p->noise_std_deg = 0.0;
        p->pause_probability = 0.0;
        p->drift_deg_per_s = 0.0;
    }
    spec.high.pause_probability = 0.0;
    spec.enforce_separation = false;
    const SynthCorpus corpus = generate_corpus(spec);
    for (const auto& s : corpus.series) {
        CHECK(s.samples.minCoeff() == 180.0);
        CHECK(s.samples.maxCoeff() == 180.0);
    }
}

TEST_CASE("a 10 vs 2 degree amplitude split separates mean path length by 3x") {
    GeneratorSpec spec;
    spec.videos_per_class = 6;
    spec.seed = 77;
    for (ClassMotionParams* p : {&spec.low, &spec.high}) {
        p->noise_std_deg = 0.0;
        p->pause_probability = 0.0;
        p->drift_deg_per_s = 0.0;
    }
    spec.low.amplitude_deg = 10.0;
    spec.high.amplitude_deg = 2.0;
    const SynthCorpus corpus = generate_corpus(spec);
    double low_sum = 0.0, high_sum = 0.0;
    for (std::size_t i = 0; i < corpus.series.size(); ++i) {
        (corpus.manifest.records[i].binary_label == BinaryLabel::Low ? low_sum : high_sum) +=
            path_length(corpus.series[i]);
    }
    CHECK(low_sum / high_sum >= 3.0);
}

TEST_CASE("a fixed seed reproduces the corpus bit for bit") {
    GeneratorSpec spec;
    spec.videos_per_class = 3;
    spec.seed = 123;
    const SynthCorpus a = generate_corpus(spec);
    const SynthCorpus b = generate_corpus(spec);
    REQUIRE(a.series.size() == b.series.size());
    for (std::size_t i = 0; i < a.series.size(); ++i) {
        CHECK(a.series[i].samples == b.series[i].samples);
        CHECK(a.manifest.records[i].raw_score == b.manifest.records[i].raw_score);
    }
    spec.seed = 124;
    const SynthCorpus c = generate_corpus(spec);
    CHECK(a.series[0].samples != c.series[0].samples);
}

TEST_CASE("severity is rank-linked to the amplitude parameter") {
    GeneratorSpec spec;  // default noise
    spec.videos_per_class = 20;
    spec.seed = 31;
    const SynthCorpus corpus = generate_corpus(spec);
    std::vector<double> sev;
    for (const auto& r : corpus.manifest.records) sev.push_back(r.raw_score);
    // motion deficit rises as amplitude falls, so the correlation is negative
    CHECK(spearman(corpus.amplitudes, sev) <= -0.9);
}

TEST_CASE("written corpora round trip through the ingest module") {
    GeneratorSpec spec;
    spec.videos_per_class = 2;
    spec.seed = 41;
    const SynthCorpus corpus = generate_corpus(spec);
    TempDir dir("synthio");
    IngestConfig cfg;
    write_corpus(corpus, dir.path().string(), cfg);

    const CorpusManifest manifest = load_manifest(dir.file("manifest.csv"));
    REQUIRE(manifest.records.size() == corpus.manifest.records.size());
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        const auto& rec = manifest.records[i];
        CHECK(rec.raw_score == corpus.manifest.records[i].raw_score);
        CHECK(rec.binary_label == corpus.manifest.records[i].binary_label);
        const AngleSeries back =
            parse_pose_csv(dir.file(rec.series_path), cfg, rec.video_id);
        REQUIRE(back.rows() == corpus.series[i].rows());
        CHECK((back.samples - corpus.series[i].samples).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("degenerate generator specs are rejected") {
    GeneratorSpec spec;
    spec.high = spec.low;  // identical classes
    CHECK_THROWS_AS(generate_corpus(spec), ConfigError);
    spec.enforce_separation = false;
    CHECK_NOTHROW(generate_corpus(spec));

    GeneratorSpec bad;
    bad.low.amplitude_deg = -1.0;
    CHECK_THROWS_AS(generate_corpus(bad), ConfigError);
    GeneratorSpec bad2;
    bad2.high.pause_probability = 1.5;
    CHECK_THROWS_AS(generate_corpus(bad2), ConfigError);
}

TEST_CASE("generator specs round trip through JSON") {
    GeneratorSpec spec;
    spec.videos_per_class = 7;
    spec.low.amplitude_deg = 12.5;
    spec.high.noise_std_deg = 0.25;
    spec.seed = 999;
    const nlohmann::json j = generator_spec_to_json(spec);
    const GeneratorSpec back = generator_spec_from_json(j);
    CHECK(back.videos_per_class == 7);
    CHECK(back.low.amplitude_deg == 12.5);
    CHECK(back.high.noise_std_deg == 0.25);
    CHECK(back.seed == 999);
}

TEST_SUITE_END();
