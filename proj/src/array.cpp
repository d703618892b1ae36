#include "shed/array.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace shed {

namespace {
Precision g_precision = Precision::f64;

long shape_numel(const std::vector<int>& shape) {
    long n = 1;
    for (int d : shape) {
        if (d < 0) throw std::invalid_argument("negative dimension");
        n *= d;
    }
    return n;
}
}  // namespace

Precision precision() { return g_precision; }
void set_precision(Precision p) { g_precision = p; }

Array::Array(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<size_t>(shape_numel(shape_)), 0.0);
}

Array::Array(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_numel(shape_) != static_cast<long>(data_.size()))
        throw std::invalid_argument("shape/data size mismatch");
}

Array Array::full(std::vector<int> shape, double v) {
    Array a(std::move(shape));
    a.fill(v);
    return a;
}

bool Array::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void Array::fill(double v) {
    for (double& x : data_) x = v;
}

Array Array::reshaped(std::vector<int> new_shape) const {
    if (shape_numel(new_shape) != numel())
        throw std::invalid_argument("reshape element count mismatch");
    return Array(std::move(new_shape), data_);
}

void Array::quantize_mode() {
    if (g_precision != Precision::f32) return;
    for (double& v : data_) v = static_cast<double>(static_cast<float>(v));
}

std::string Array::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "x" : "") << shape_[i];
    os << "]";
    return os.str();
}

bool bitwise_equal(const Array& a, const Array& b) {
    if (a.shape() != b.shape()) return false;
    for (long i = 0; i < a.numel(); ++i) {
        // compare representations so that 0.0 vs -0.0 count as different
        double x = a.at(static_cast<int>(i)), y = b.at(static_cast<int>(i));
        if (std::memcmp(&x, &y, sizeof(double)) != 0) return false;
    }
    return true;
}

uint64_t hash64(std::string_view s) {
    // FNV-1a
    uint64_t h = 1469598103934665603ull;
    for (char c : s) {
        h ^= static_cast<uint8_t>(c);
        h *= 1099511628211ull;
    }
    return h;
}

namespace {
uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}
}  // namespace

Rng::Rng(uint64_t seed) : seed_(seed), counter_(0) {}

uint64_t Rng::next_u64() {
    uint64_t v = splitmix64(seed_ + counter_ * 0x9E3779B97F4A7C15ull);
    ++counter_;
    return v;
}

double Rng::uniform() {
    // top 53 bits -> [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    return r * std::cos(2.0 * M_PI * u2);
}

int Rng::uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    return static_cast<int>(next_u64() % static_cast<uint64_t>(n));
}

double Rng::trunc_normal(double sigma) {
    for (;;) {
        double z = normal();
        if (std::fabs(z) <= 2.0) return z * sigma;
    }
}

Rng Rng::child(std::string_view label) const {
    return Rng(splitmix64(seed_ ^ hash64(label)));
}

}  // namespace shed
