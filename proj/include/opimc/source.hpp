#ifndef OPIMC_SOURCE_HPP
#define OPIMC_SOURCE_HPP

#include <cstddef>
#include <optional>

#include "opimc/model.hpp"

namespace opimc {

/**
 * @brief A replayable, forward-only supply of instances in a fixed order.
 *
 * Implementations hand out zero-filled, unit-normalized chunks. The solver
 * never needs more than one chunk at a time.
 */
class ChunkSource {
public:
    virtual ~ChunkSource() = default;

    virtual const DatasetMeta& meta() const = 0;

    /// Restart from instance 0.
    virtual void rewind() = 0;

    /**
     * Up to `max_count` next instances, or nullopt once the source is
     * exhausted. `offset` is filled in; `chunk_index` is left to the caller.
     */
    virtual std::optional<MultiViewChunk> read(std::size_t max_count) = 0;
};

}  // namespace opimc

#endif  // OPIMC_SOURCE_HPP
