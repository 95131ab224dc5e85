#include <catch2/catch.hpp>

#include "dtgs/metrics.hpp"
#include "dtgs/rng.hpp"

using namespace dtgs;

namespace {

ImageRGB random_image(Rng& rng, int w, int h, double lo = 0.0, double hi = 1.0) {
    ImageRGB img(w, h);
    for (double& v : img.data) v = rng.uniform(lo, hi);
    return img;
}

/// Independent SSIM oracle: direct 11x11 windowed loop, no separable tricks.
double ssim_oracle(const ImageRGB& a, const ImageRGB& b) {
    const int w = a.width, h = a.height;
    std::vector<double> kern(kSsimWindow);
    double ks = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - 5.0;
        kern[i] = std::exp(-0.5 * d * d / (1.5 * 1.5));
        ks += kern[i];
    }
    for (double& k : kern) k /= ks;

    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        int count = 0;
        for (int cy = 5; cy < h - 5; ++cy)
            for (int cx = 5; cx < w - 5; ++cx) {
                double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
                for (int dy = -5; dy <= 5; ++dy)
                    for (int dx = -5; dx <= 5; ++dx) {
                        const double wgt = kern[dy + 5] * kern[dx + 5];
                        const double x = a.at(cy + dy, cx + dx, c);
                        const double y = b.at(cy + dy, cx + dx, c);
                        mx += wgt * x;
                        my += wgt * y;
                        mxx += wgt * x * x;
                        myy += wgt * y * y;
                        mxy += wgt * x * y;
                    }
                const double sx = mxx - mx * mx, sy = myy - my * my, sxy = mxy - mx * my;
                acc += (2 * mx * my + kSsimC1) * (2 * sxy + kSsimC2) /
                       ((mx * mx + my * my + kSsimC1) * (sx + sy + kSsimC2));
                ++count;
            }
        total += acc / count;
    }
    return total / 3.0;
}

}  // namespace

TEST_CASE("psnr basics") {
    ImageRGB a(8, 6, 0.3), b(8, 6, 0.3);
    REQUIRE(psnr(a, b) == 99.0);

    ImageRGB black(8, 6, 0.0), white(8, 6, 1.0);
    REQUIRE(psnr(black, white) == Approx(0.0).margin(1e-12));

    ImageRGB c(8, 6, 0.5), d(8, 6, 0.6);
    REQUIRE(psnr(c, d) == Approx(20.0).margin(1e-9));
}

TEST_CASE("psnr is monotone in mse and noise never helps") {
    ImageRGB base(16, 16, 0.5);
    Rng rng(3);
    double prev = 1e18;
    for (double off : {0.01, 0.02, 0.05, 0.1, 0.2}) {
        ImageRGB shifted(16, 16, 0.5 + off);
        const double p = psnr(base, shifted);
        REQUIRE(p < prev);
        prev = p;
    }
    // Adding independent noise to one side of an identical pair: expected PSNR drops.
    int worse = 0;
    for (int trial = 0; trial < 20; ++trial) {
        ImageRGB noisy = base;
        for (double& v : noisy.data) v += 0.05 * rng.normal();
        if (psnr(base, noisy) < psnr(base, base)) ++worse;
    }
    REQUIRE(worse == 20);
}

TEST_CASE("psnr shape mismatch throws") {
    REQUIRE_THROWS_AS(psnr(ImageRGB(4, 4), ImageRGB(5, 4)), ValidationError);
}

TEST_CASE("ssim of identical images is 1") {
    Rng rng(4);
    const ImageRGB a = random_image(rng, 16, 12);
    REQUIRE(ssim(a, a) == Approx(1.0).margin(1e-12));
}

TEST_CASE("ssim is symmetric") {
    Rng rng(5);
    const ImageRGB a = random_image(rng, 14, 13);
    const ImageRGB b = random_image(rng, 14, 13);
    REQUIRE(ssim(a, b) == Approx(ssim(b, a)).margin(1e-12));
}

TEST_CASE("ssim of constant images matches the closed form") {
    ImageRGB a(12, 12, 0.5), b(12, 12, 0.6);
    const double expected = (2 * 0.5 * 0.6 + kSsimC1) / (0.5 * 0.5 + 0.6 * 0.6 + kSsimC1);
    REQUIRE(ssim(a, b) == Approx(expected).margin(1e-12));
    REQUIRE(expected == Approx(0.9836).margin(5e-5));
}

TEST_CASE("ssim matches the naive windowed oracle") {
    Rng rng(6);
    for (int trial = 0; trial < 3; ++trial) {
        const ImageRGB a = random_image(rng, 16, 14);
        const ImageRGB b = random_image(rng, 16, 14);
        REQUIRE(ssim(a, b) == Approx(ssim_oracle(a, b)).margin(1e-10));
    }
}

TEST_CASE("ssim drops under a spatial shift") {
    Rng rng(7);
    ImageRGB a(24, 24);
    // smooth non-constant pattern
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x)
            for (int c = 0; c < 3; ++c)
                a.at(y, x, c) = 0.5 + 0.4 * std::sin(0.6 * x + 0.3 * c) * std::cos(0.5 * y);
    ImageRGB shifted(24, 24);
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x)
            for (int c = 0; c < 3; ++c)
                shifted.at(y, x, c) = a.at(y, std::min(23, x + 3), c);
    REQUIRE(ssim(a, shifted) < ssim(a, a) - 1e-3);
}

TEST_CASE("ssim rejects images below the window size") {
    REQUIRE_THROWS_AS(ssim(ImageRGB(10, 12), ImageRGB(10, 12)), ValidationError);
}

TEST_CASE("ssim gradient matches central finite differences") {
    Rng rng(8);
    const ImageRGB x = random_image(rng, 13, 12);
    const ImageRGB y = random_image(rng, 13, 12);
    const SsimWithGrad g = ssim_with_grad(x, y);
    REQUIRE(g.value == Approx(ssim(x, y)).margin(1e-13));

    const double h = 1e-5;
    double max_rel = 0.0;
    for (size_t i = 0; i < x.data.size(); i += 7) {  // stride keeps the test quick
        ImageRGB xp = x, xm = x;
        xp.data[i] += h;
        xm.data[i] -= h;
        const double fd = (ssim(xp, y) - ssim(xm, y)) / (2 * h);
        const double rel = std::abs(fd - g.d_first.data[i]) /
                           std::max({std::abs(fd), std::abs(g.d_first.data[i]), 1e-4});
        max_rel = std::max(max_rel, rel);
    }
    REQUIRE(max_rel < 1e-4);
}
