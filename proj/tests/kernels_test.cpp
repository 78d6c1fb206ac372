#include <array>
#include <cmath>
#include <vector>

#include "coagents/kernels.hpp"
#include "coagents/rng.hpp"
#include "doctest.h"

using coagents::Rng;
namespace kern = coagents::kern;

namespace {

std::vector<double> randvec(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-2.0, 2.0);
    return v;
}

// matmul sums reassociate under SIMD, so equivalence is checked with a small
// relative tolerance; elementwise ops must agree exactly
void check_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1.0});
        CHECK(std::abs(a[i] - b[i]) <= tol * scale);
    }
}

}  // namespace

TEST_CASE("scalar and active kernels agree on every entry point") {
    const kern::Kernels& ref = kern::scalar();
    const kern::Kernels& act = kern::active();
    Rng rng(77001);

    // lengths straddle the 4-wide AVX2 stride, including remainders and empty
    for (std::size_t n : {0, 1, 2, 3, 4, 5, 7, 8, 13, 64, 100, 257}) {
        const auto x = randvec(rng, n), y = randvec(rng, n);

        CHECK(std::abs(ref.dot(n, x.data(), y.data()) - act.dot(n, x.data(), y.data())) <=
              1e-12 * (1.0 + std::abs(ref.dot(n, x.data(), y.data()))));
        CHECK(ref.vsum(n, x.data()) == doctest::Approx(act.vsum(n, x.data())).epsilon(1e-12));

        auto y1 = y, y2 = y;
        ref.axpy(n, 1.7, x.data(), y1.data());
        act.axpy(n, 1.7, x.data(), y2.data());
        check_close(y1, y2, 1e-15);  // FMA contracts a*x+y into one rounding

        auto s1 = x, s2 = x;
        ref.scale(n, -0.3, s1.data());
        act.scale(n, -0.3, s2.data());
        check_close(s1, s2, 0.0);

        std::vector<double> o1(n), o2(n);
        ref.vadd(n, x.data(), y.data(), o1.data());
        act.vadd(n, x.data(), y.data(), o2.data());
        check_close(o1, o2, 0.0);
        ref.vmul(n, x.data(), y.data(), o1.data());
        act.vmul(n, x.data(), y.data(), o2.data());
        check_close(o1, o2, 0.0);
    }
}

TEST_CASE("matmul variants match the scalar reference") {
    const kern::Kernels& ref = kern::scalar();
    const kern::Kernels& act = kern::active();
    Rng rng(77002);

    for (auto [m, k, n] : std::vector<std::array<std::size_t, 3>>{
             {1, 1, 1}, {2, 3, 4}, {5, 7, 3}, {8, 8, 8}, {13, 9, 17}, {1, 32, 6}}) {
        const auto A = randvec(rng, m * k);
        const auto Bnn = randvec(rng, k * n);
        const auto Bnt = randvec(rng, n * k);
        const auto Btn = randvec(rng, m * n);
        const auto C0 = randvec(rng, m * n);  // accumulation seeds

        auto c1 = C0, c2 = C0;
        ref.matmul_nn_acc(m, k, n, A.data(), Bnn.data(), c1.data());
        act.matmul_nn_acc(m, k, n, A.data(), Bnn.data(), c2.data());
        check_close(c1, c2, 1e-12);

        c1 = C0, c2 = C0;
        ref.matmul_nt_acc(m, k, n, A.data(), Bnt.data(), c1.data());
        act.matmul_nt_acc(m, k, n, A.data(), Bnt.data(), c2.data());
        check_close(c1, c2, 1e-12);

        std::vector<double> d1(k * n, 0.5), d2(k * n, 0.5);
        ref.matmul_tn_acc(m, k, n, A.data(), Btn.data(), d1.data());
        act.matmul_tn_acc(m, k, n, A.data(), Btn.data(), d2.data());
        check_close(d1, d2, 1e-12);
    }
}

TEST_CASE("matmul against hand-computed products") {
    // [1 2; 3 4] * [5 6; 7 8] = [19 22; 43 50]
    const std::vector<double> A{1, 2, 3, 4}, B{5, 6, 7, 8};
    std::vector<double> C(4, 0.0);
    kern::scalar().matmul_nn_acc(2, 2, 2, A.data(), B.data(), C.data());
    CHECK(C == std::vector<double>{19, 22, 43, 50});

    // A * B^T with B stored (2 x 2): [1 2; 3 4] * [5 7; 6 8]^T... B^T rows are B's rows
    std::vector<double> D(4, 0.0);
    kern::scalar().matmul_nt_acc(2, 2, 2, A.data(), B.data(), D.data());
    CHECK(D == std::vector<double>{17, 23, 39, 53});
}

TEST_CASE("force rejects unknown kernel names") {
    CHECK_THROWS_AS(kern::force("sse9"), std::invalid_argument);
}
