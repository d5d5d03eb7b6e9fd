// Multi-crop contract: view counts, the >50% / <50% area split, range
// invariants over many seeds, and bit-exact determinism.

#include <catch2/catch_amalgamated.hpp>

#include "sslbench/core/rng.hpp"
#include "sslbench/image/augment.hpp"

using namespace sslbench;

namespace {

Image random_image(Rng& rng, int h, int w, int c) {
    Image img(h, w, c);
    for (auto& v : img.pixels) v = static_cast<float>(rng.uniform());
    return img;
}

}  // namespace

TEST_CASE("multi_crop produces two global and five local views") {
    Rng seed_rng(derive_seed(31, "views"));
    Image img = random_image(seed_rng, 64, 64, 3);
    AugmentPolicy policy;
    Rng rng(derive_seed(31, "mc"));
    ViewSet vs = multi_crop(img, policy, rng);
    REQUIRE(vs.global_views.size() == 2);
    REQUIRE(vs.local_views.size() == 5);
    for (const auto& v : vs.global_views) {
        REQUIRE(v.height == policy.global_size);
        REQUIRE(v.width == policy.global_size);
        REQUIRE(v.channels == 3);
    }
    for (const auto& v : vs.local_views) {
        REQUIRE(v.height == policy.local_size);
        REQUIRE(v.width == policy.local_size);
    }
}

TEST_CASE("crop scale split and pixel range hold over many seeds") {
    Rng img_rng(derive_seed(32, "imgs"));
    AugmentPolicy policy;
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        // mix of sizes, aspect ratios, and channel counts
        const int h = 32 + static_cast<int>(seed % 3) * 16;
        const int w = 32 + static_cast<int>(seed % 5) * 8;
        const int c = (seed % 4 == 3) ? 1 : 3;
        Image img = random_image(img_rng, h, w, c);
        Rng rng(derive_seed(seed, "sweep"));
        ViewSet vs = multi_crop(img, policy, rng);
        REQUIRE(vs.global_views.size() == 2);
        REQUIRE(vs.local_views.size() == 5);
        for (double f : vs.global_area_fraction) {
            REQUIRE(f > 0.5);
            REQUIRE(f <= 1.0);
        }
        for (double f : vs.local_area_fraction) {
            REQUIRE(f < 0.5);
            REQUIRE(f >= policy.local_area_min - 1e-12);
        }
        for (const auto& v : vs.global_views)
            for (float px : v.pixels) REQUIRE((px >= 0.0f && px <= 1.0f));
        for (const auto& v : vs.local_views)
            for (float px : v.pixels) REQUIRE((px >= 0.0f && px <= 1.0f));
        ++checked;
    }
    REQUIRE(checked == 1000);
}

TEST_CASE("multi_crop is a pure function of image, policy, and seed") {
    Rng img_rng(derive_seed(33, "det"));
    Image img = random_image(img_rng, 48, 48, 3);
    AugmentPolicy policy;

    Rng r1(derive_seed(7, "mc"));
    Rng r2(derive_seed(7, "mc"));
    ViewSet a = multi_crop(img, policy, r1);
    ViewSet b = multi_crop(img, policy, r2);
    for (std::size_t i = 0; i < a.global_views.size(); ++i) {
        REQUIRE(a.global_views[i].pixels == b.global_views[i].pixels);
    }
    for (std::size_t i = 0; i < a.local_views.size(); ++i) {
        REQUIRE(a.local_views[i].pixels == b.local_views[i].pixels);
    }

    Rng r3(derive_seed(8, "mc"));
    ViewSet c = multi_crop(img, policy, r3);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.global_views.size() && !any_diff; ++i) {
        any_diff = a.global_views[i].pixels != c.global_views[i].pixels;
    }
    REQUIRE(any_diff);
}

TEST_CASE("augment with everything disabled is the identity") {
    Rng img_rng(derive_seed(34, "ident"));
    Image img = random_image(img_rng, 32, 32, 3);
    AugmentPolicy off;
    off.enable_flip = off.enable_rotation = off.enable_jitter = false;
    off.enable_grayscale = off.enable_blur = off.enable_solarize = false;
    Rng rng(derive_seed(34, "aug"));
    Image out = augment(img, off, rng);
    REQUIRE(out.pixels == img.pixels);
}

TEST_CASE("solarization only touches the second global view") {
    // with the policy pinned to always solarize, view roles decide placement
    AugmentPolicy p;
    p.enable_flip = p.enable_rotation = p.enable_jitter = false;
    p.enable_grayscale = p.enable_blur = false;
    p.p_solarize = 1.0;
    Rng img_rng(derive_seed(35, "sol"));
    Image img = random_image(img_rng, 32, 32, 3);

    Rng r1(derive_seed(35, "a"));
    Image first_global = augment(img, p, r1, ViewRole{true, 0});
    REQUIRE(first_global.pixels == img.pixels);

    Rng r2(derive_seed(35, "b"));
    Image second_global = augment(img, p, r2, ViewRole{true, 1});
    REQUIRE(second_global.pixels == solarize(img, p.solarize_threshold).pixels);

    Rng r3(derive_seed(35, "c"));
    Image local = augment(img, p, r3, ViewRole{false, 1});
    REQUIRE(local.pixels == img.pixels);
}

TEST_CASE("policy and input validation") {
    AugmentPolicy p;
    p.p_hflip = 1.5;
    Rng rng(derive_seed(36, "val"));
    Image img(32, 32, 3);
    REQUIRE_THROWS_AS(multi_crop(img, p, rng), ConfigError);

    AugmentPolicy bad_area;
    bad_area.global_area_min = 0.3;
    REQUIRE_THROWS_AS(multi_crop(img, bad_area, rng), ConfigError);

    AugmentPolicy tiny;
    tiny.local_area_min = 0.005;
    tiny.local_area_max = 0.01;
    Image small(8, 8, 1);
    REQUIRE_THROWS_AS(multi_crop(small, tiny, rng), DataError);
}
