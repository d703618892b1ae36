#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace shed {

// Global numeric mode. In f32 mode every produced array is rounded element-wise
// through float, so stored values are exactly representable in 32 bits and
// checkpoints round-trip bitwise. f64 mode keeps full double precision and is
// what the gradient checks run under.
enum class Precision { f32, f64 };

Precision precision();
void set_precision(Precision p);

inline double quantize(double v, Precision p) {
    return p == Precision::f32 ? static_cast<double>(static_cast<float>(v)) : v;
}

// Dense row-major array of doubles with a small shape vector. Rank 1..3 is all
// the model needs. Values are immutable by convention once an op has produced
// them; mutation is reserved for construction and the optimizer.
class Array {
public:
    Array() = default;
    explicit Array(std::vector<int> shape);
    Array(std::vector<int> shape, std::vector<double> data);
    static Array zeros(std::vector<int> shape) { return Array(std::move(shape)); }
    static Array full(std::vector<int> shape, double v);
    static Array scalar(double v) { return Array({1}, {v}); }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    long numel() const { return static_cast<long>(data_.size()); }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }

    // rank-2 convenience
    int rows() const { return shape_[0]; }
    int cols() const { return shape_[1]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& at(int i) { return data_[static_cast<size_t>(i)]; }
    double at(int i) const { return data_[static_cast<size_t>(i)]; }
    double& at(int i, int j) { return data_[static_cast<size_t>(i) * shape_[1] + j]; }
    double at(int i, int j) const { return data_[static_cast<size_t>(i) * shape_[1] + j]; }
    double& at(int i, int j, int k) {
        return data_[(static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k];
    }
    double at(int i, int j, int k) const {
        return data_[(static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k];
    }

    bool same_shape(const Array& o) const { return shape_ == o.shape_; }
    bool all_finite() const;
    void fill(double v);

    // Reinterpret the flat buffer under a new shape with equal element count.
    Array reshaped(std::vector<int> new_shape) const;

    // Round every element through float when the global mode is f32.
    void quantize_mode();

    std::string shape_str() const;

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

bool bitwise_equal(const Array& a, const Array& b);

// Counter-based splitmix64 stream. Same seed gives the same sequence on every
// platform. Child streams for independent consumers are derived by hashing a
// label into the seed, so parallel generators never share state.
class Rng {
public:
    explicit Rng(uint64_t seed);

    uint64_t next_u64();
    // uniform in [0, 1)
    double uniform();
    double uniform(double lo, double hi);
    // standard normal via Box-Muller (two draws per call, no cached spare)
    double normal();
    double normal(double mu, double sigma) { return mu + sigma * normal(); }
    // uniform integer in [0, n)
    int uniform_int(int n);
    // normal(0, sigma) resampled until |z| <= 2*sigma
    double trunc_normal(double sigma);

    Rng child(std::string_view label) const;

    uint64_t seed() const { return seed_; }
    uint64_t counter() const { return counter_; }
    void restore(uint64_t seed, uint64_t counter) {
        seed_ = seed;
        counter_ = counter;
    }

private:
    uint64_t seed_ = 0;
    uint64_t counter_ = 0;
};

uint64_t hash64(std::string_view s);

}  // namespace shed
