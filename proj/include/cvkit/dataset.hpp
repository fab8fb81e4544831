#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

namespace cvkit {

/// Read-only, array-like collection of samples.
///
/// get(i) must be valid for 0 <= i < size(), must not mutate the dataset,
/// and must be safe to call concurrently.
template <typename Sample>
class Dataset {
public:
    using sample_type = Sample;

    virtual ~Dataset() = default;

    virtual std::size_t size() const = 0;
    virtual Sample get(std::size_t i) const = 0;

protected:
    void check_index(std::size_t i) const
    {
        if (i >= size()) {
            throw std::out_of_range("dataset index " + std::to_string(i) + " out of range (size " +
                                    std::to_string(size()) + ")");
        }
    }
};

template <typename Sample>
using DatasetPtr = std::shared_ptr<const Dataset<Sample>>;

}  // namespace cvkit
