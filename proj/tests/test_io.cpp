// Dataset ingestion, codecs, the synthetic generator, and the two binary
// persistence formats.

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "sslbench/core/rng.hpp"
#include "sslbench/io/checkpoint.hpp"
#include "sslbench/io/dataset.hpp"
#include "sslbench/io/feature_file.hpp"
#include "sslbench/io/image_codec.hpp"
#include "sslbench/io/synthetic.hpp"

using namespace sslbench;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("sslbench_test_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

Image quantized_random_image(Rng& rng, int h, int w, int c) {
    Image img(h, w, c);
    for (auto& v : img.pixels) {
        v = static_cast<float>(rng.uniform_int(0, 255)) / 255.0f;
    }
    return img;
}

std::vector<char> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("pnm round-trips 8-bit data exactly") {
    const auto dir = temp_dir("pnm");
    Rng rng(derive_seed(41, "pnm"));

    Image rgb = quantized_random_image(rng, 9, 7, 3);
    save_pnm((dir / "a.ppm").string(), rgb);
    Image back = load_pnm((dir / "a.ppm").string());
    REQUIRE(back.height == 9);
    REQUIRE(back.width == 7);
    REQUIRE(back.channels == 3);
    REQUIRE(back.pixels == rgb.pixels);

    Image gray = quantized_random_image(rng, 8, 8, 1);
    save_pnm((dir / "g.pgm").string(), gray);
    REQUIRE(load_pnm((dir / "g.pgm").string()).pixels == gray.pixels);

    // identical content writes identical bytes
    save_pnm((dir / "a2.ppm").string(), rgb);
    REQUIRE(read_bytes(dir / "a.ppm") == read_bytes(dir / "a2.ppm"));
}

TEST_CASE("pnm parser handles comments and rejects malformed input") {
    const auto dir = temp_dir("pnm_parse");
    {
        std::ofstream out(dir / "c.pgm", std::ios::binary);
        out << "P5\n# a comment\n2 2\n# another\n255\n";
        const unsigned char px[4] = {0, 85, 170, 255};
        out.write(reinterpret_cast<const char*>(px), 4);
    }
    Image img = load_pnm((dir / "c.pgm").string());
    REQUIRE(img.at(0, 0, 0) == 0.0f);
    REQUIRE(img.at(0, 0, 1) == Catch::Approx(85.0 / 255.0));
    REQUIRE(img.at(0, 1, 1) == 1.0f);

    {
        std::ofstream out(dir / "t.pgm", std::ios::binary);
        out << "P5\n4 4\n255\n";
        out << "xy";  // 2 bytes instead of 16
    }
    REQUIRE_THROWS_AS(load_pnm((dir / "t.pgm").string()), DataError);

    {
        std::ofstream out(dir / "m.pgm", std::ios::binary);
        out << "P5\n2 2\n65535\n";
    }
    REQUIRE_THROWS_AS(load_pnm((dir / "m.pgm").string()), DataError);
}

TEST_CASE("png round-trips 8-bit data exactly") {
    const auto dir = temp_dir("png");
    Rng rng(derive_seed(42, "png"));
    for (int c : {1, 3}) {
        Image img = quantized_random_image(rng, 11, 13, c);
        const auto p = (dir / ("img" + std::to_string(c) + ".png")).string();
        save_png(p, img);
        Image back = load_png(p);
        REQUIRE(back.channels == c);
        REQUIRE(back.pixels == img.pixels);
        // magic-dispatched loader agrees
        REQUIRE(load_image(p).pixels == img.pixels);
    }
    REQUIRE_THROWS_AS(load_png((dir / "absent.png").string()), DataError);

    std::ofstream bad(dir / "bad.png", std::ios::binary);
    bad << "\x89PNG not really";
    bad.close();
    REQUIRE_THROWS_AS(load_image((dir / "bad.png").string()), DataError);
}

TEST_CASE("manifest datasets") {
    const auto dir = temp_dir("ds");
    Rng rng(derive_seed(43, "ds"));
    fs::create_directories(dir / "img");
    for (int i = 0; i < 5; ++i) {
        save_pnm((dir / "img" / ("s" + std::to_string(i) + ".ppm")).string(),
                 quantized_random_image(rng, 16, 16, 3));
    }

    SECTION("labeled and unlabeled pools split correctly") {
        std::ofstream m(dir / "manifest.csv");
        m << "path,label\n";
        m << "img/s0.ppm,tumor\n";
        m << "img/s1.ppm,stroma\n";
        m << "img/s2.ppm,tumor\n";
        m << "img/s3.ppm,_unlabeled_\n";
        m << "img/s4.ppm,_unlabeled_\n";
        m.close();
        Dataset ds = load_dataset((dir / "manifest.csv").string());
        REQUIRE(ds.labeled.size() == 3);
        REQUIRE(ds.unlabeled.size() == 2);
        REQUIRE(ds.class_names == std::vector<std::string>{"tumor", "stroma"});
        REQUIRE(ds.labeled[0].label == 0);
        REQUIRE(ds.labeled[1].label == 1);
        REQUIRE(ds.labeled[2].label == 0);
        REQUIRE(ds.unlabeled[0].label == -1);

        // stable mapping across reloads
        Dataset ds2 = load_dataset((dir / "manifest.csv").string());
        REQUIRE(ds2.class_names == ds.class_names);

        // resize-at-load honors the requested resolution
        Dataset ds3 = load_dataset((dir / "manifest.csv").string(), 32);
        REQUIRE(ds3.labeled[0].image.height == 32);
        REQUIRE(ds3.labeled[0].image.width == 32);
    }
    SECTION("duplicate path is rejected with its line number") {
        std::ofstream m(dir / "dup.csv");
        m << "path,label\nimg/s0.ppm,a\nimg/s0.ppm,b\n";
        m.close();
        try {
            load_dataset((dir / "dup.csv").string());
            FAIL("expected DataError");
        } catch (const DataError& e) {
            REQUIRE(std::string(e.what()).find(":3") != std::string::npos);
            REQUIRE(std::string(e.what()).find("duplicate") != std::string::npos);
        }
    }
    SECTION("missing file names the offending path") {
        std::ofstream m(dir / "missing.csv");
        m << "path,label\nimg/ghost.ppm,a\n";
        m.close();
        try {
            load_dataset((dir / "missing.csv").string());
            FAIL("expected DataError");
        } catch (const DataError& e) {
            REQUIRE(std::string(e.what()).find("ghost.ppm") != std::string::npos);
        }
    }
    SECTION("missing header rejected") {
        std::ofstream m(dir / "nohdr.csv");
        m << "img/s0.ppm,a\n";
        m.close();
        REQUIRE_THROWS_AS(load_dataset((dir / "nohdr.csv").string()), DataError);
    }
}

TEST_CASE("synthetic dataset generation") {
    SECTION("counts, manifest, determinism") {
        const auto dir1 = temp_dir("synth1");
        const auto dir2 = temp_dir("synth2");
        SynthConfig cfg;
        cfg.classes = 4;
        cfg.per_class = 10;
        cfg.unlabeled_per_class = 3;
        cfg.size = 32;
        cfg.freq_max = 7.0;  // respect the Nyquist guard at size 32

        const std::string m1 = generate_synthetic(cfg, 99, dir1.string());
        const std::string m2 = generate_synthetic(cfg, 99, dir2.string());
        Dataset ds = load_dataset(m1);
        REQUIRE(ds.labeled.size() == 40);
        REQUIRE(ds.unlabeled.size() == 12);
        REQUIRE(ds.num_classes() == 4);

        for (const auto& s : ds.labeled) {
            REQUIRE(fs::exists(dir1 / s.id));
        }
        // byte-identical across runs with the same seed
        REQUIRE(read_bytes(dir1 / ds.labeled[0].id) == read_bytes(dir2 / ds.labeled[0].id));
        REQUIRE(read_bytes(dir1 / "manifest.csv") == read_bytes(dir2 / "manifest.csv"));

        const std::string m3 = generate_synthetic(cfg, 100, (dir2 / "other").string());
        Dataset ds3 = load_dataset(m3);
        REQUIRE(ds3.labeled[0].image.pixels != ds.labeled[0].image.pixels);
    }
    SECTION("raw-pixel nearest centroid is above chance but imperfect") {
        const auto dir = temp_dir("synth_nc");
        SynthConfig cfg;
        cfg.classes = 4;
        cfg.per_class = 60;
        cfg.size = 32;
        cfg.freq_max = 7.0;
        generate_synthetic(cfg, 7, dir.string());
        Dataset ds = load_dataset((dir / "manifest.csv").string());

        // train on the first 40 per class, test on the rest
        const std::size_t dim = ds.labeled[0].image.pixels.size();
        std::vector<std::vector<double>> centroid(4, std::vector<double>(dim, 0.0));
        std::vector<int> count(4, 0);
        std::vector<const Sample*> test;
        std::vector<int> per_class_seen(4, 0);
        for (const auto& s : ds.labeled) {
            if (per_class_seen[s.label] < 40) {
                for (std::size_t i = 0; i < dim; ++i) centroid[s.label][i] += s.image.pixels[i];
                count[s.label]++;
                per_class_seen[s.label]++;
            } else {
                test.push_back(&s);
            }
        }
        for (int c = 0; c < 4; ++c)
            for (auto& v : centroid[c]) v /= count[c];
        int correct = 0;
        for (const Sample* s : test) {
            int best = -1;
            double best_d = 1e300;
            for (int c = 0; c < 4; ++c) {
                double d2 = 0.0;
                for (std::size_t i = 0; i < dim; ++i) {
                    const double diff = s->image.pixels[i] - centroid[c][i];
                    d2 += diff * diff;
                }
                if (d2 < best_d) {
                    best_d = d2;
                    best = c;
                }
            }
            if (best == s->label) ++correct;
        }
        const double acc = static_cast<double>(correct) / static_cast<double>(test.size());
        INFO("nearest-centroid raw-pixel accuracy " << acc);
        REQUIRE(acc > 0.30);  // chance is 0.25
        REQUIRE(acc < 1.00);
    }
    SECTION("config validation") {
        SynthConfig bad;
        bad.classes = 1;
        REQUIRE_THROWS_AS(validate_synth_config(bad), ConfigError);
        SynthConfig alias;
        alias.size = 32;
        alias.freq_max = 20.0;  // 20 > 32/4
        REQUIRE_THROWS_AS(validate_synth_config(alias), ConfigError);
    }
}

TEST_CASE("checkpoint persistence") {
    const auto dir = temp_dir("ckpt");
    Rng rng(derive_seed(44, "ckpt"));

    Checkpoint ckpt;
    ckpt.seed = 1234;
    ckpt.step = 56;
    ckpt.config_echo = "[trainer]\nsteps=56\n";
    std::vector<float> w(24);
    for (auto& v : w) v = static_cast<float>(rng.uniform(-2, 2));
    ckpt.add("student.w", {4, 6}, w);
    std::vector<float> c(7);
    for (auto& v : c) v = static_cast<float>(rng.uniform(-1, 1));
    ckpt.add("center", {7}, c);

    const auto path = (dir / "run.ckpt").string();
    save_checkpoint(path, ckpt);

    SECTION("round-trip is bit-exact") {
        Checkpoint back = load_checkpoint(path);
        REQUIRE(back.seed == 1234);
        REQUIRE(back.step == 56);
        REQUIRE(back.config_echo == ckpt.config_echo);
        REQUIRE(back.blobs.size() == 2);
        REQUIRE(back.find("student.w") != nullptr);
        REQUIRE(back.find("student.w")->shape == Shape{4, 6});
        REQUIRE(back.find("student.w")->data == w);  // bitwise float equality
        REQUIRE(back.find("center")->data == c);
        REQUIRE(back.find("nope") == nullptr);
    }
    SECTION("truncation and corruption are caught") {
        auto bytes = read_bytes(dir / "run.ckpt");
        {
            std::ofstream out(dir / "trunc.ckpt", std::ios::binary);
            out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 9));
        }
        REQUIRE_THROWS_AS(load_checkpoint((dir / "trunc.ckpt").string()), DataError);

        auto corrupt = bytes;
        corrupt[corrupt.size() - 20] ^= 0x40;  // flip a payload bit
        {
            std::ofstream out(dir / "bad.ckpt", std::ios::binary);
            out.write(corrupt.data(), static_cast<std::streamsize>(corrupt.size()));
        }
        REQUIRE_THROWS_WITH(load_checkpoint((dir / "bad.ckpt").string()),
                            Catch::Matchers::ContainsSubstring("CRC"));
    }
    SECTION("structural mismatch names the parameter") {
        Checkpoint back = load_checkpoint(path);
        ParameterSet<float> ps;
        ps.add("w", Tensor<float>::zeros({4, 5}));  // wrong shape
        try {
            load_params_from_checkpoint(back, "student.", ps);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            REQUIRE(std::string(e.what()).find("student.w") != std::string::npos);
        }
        ParameterSet<float> missing;
        missing.add("absent", Tensor<float>::zeros({2}));
        REQUIRE_THROWS_AS(load_params_from_checkpoint(back, "student.", missing), DataError);

        ParameterSet<float> good;
        good.add("w", Tensor<float>::zeros({4, 6}));
        load_params_from_checkpoint(back, "student.", good);
        REQUIRE(good.at("w").values() == w);
    }
    SECTION("parameter sets round-trip through blobs") {
        ParameterSet<float> ps;
        Rng r2(derive_seed(44, "ps"));
        ps.add("a", Tensor<float>::randn({3, 2}, r2));
        ps.add("b", Tensor<float>::randn({5}, r2));
        Checkpoint ck2;
        store_params_in_checkpoint(ck2, "teacher.", ps);
        save_checkpoint((dir / "ps.ckpt").string(), ck2);
        Checkpoint back = load_checkpoint((dir / "ps.ckpt").string());
        ParameterSet<float> ps2;
        ps2.add("a", Tensor<float>::zeros({3, 2}));
        ps2.add("b", Tensor<float>::zeros({5}));
        load_params_from_checkpoint(back, "teacher.", ps2);
        REQUIRE(ps2.at("a").values() == ps.at("a").values());
        REQUIRE(ps2.at("b").values() == ps.at("b").values());
    }
}

TEST_CASE("feature file persistence") {
    const auto dir = temp_dir("feat");
    Rng rng(derive_seed(45, "feat"));

    FeatureMatrix fm;
    fm.n = 5;
    fm.d = 3;
    fm.data.resize(15);
    for (auto& v : fm.data) v = static_cast<float>(rng.uniform(-3, 3));
    for (int i = 0; i < 5; ++i) {
        fm.ids.push_back("img/sample_" + std::to_string(i) + ".ppm");
        fm.labels.push_back(i % 2);
    }
    const auto path = (dir / "train.feat").string();
    save_features(path, fm);
    FeatureMatrix back = load_features(path);
    REQUIRE(back.n == 5);
    REQUIRE(back.d == 3);
    REQUIRE(back.data == fm.data);
    REQUIRE(back.ids == fm.ids);
    REQUIRE(back.labels == fm.labels);

    auto bytes = read_bytes(dir / "train.feat");
    {
        std::ofstream out(dir / "trunc.feat", std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    }
    REQUIRE_THROWS_AS(load_features((dir / "trunc.feat").string()), DataError);

    FeatureMatrix bad = fm;
    bad.labels.pop_back();
    REQUIRE_THROWS_AS(save_features((dir / "x.feat").string(), bad), DataError);
}
