#ifndef RDC_RDC_HPP
#define RDC_RDC_HPP

// Single include for applications: runtime, collections, relocation,
// intra-place parallelism.

#include "rdc/bytes.hpp"
#include "rdc/collections/bag.hpp"
#include "rdc/collections/cachable_array.hpp"
#include "rdc/collections/cachable_chunked_list.hpp"
#include "rdc/collections/dist_bag.hpp"
#include "rdc/collections/dist_chunked_list.hpp"
#include "rdc/collections/dist_id_map.hpp"
#include "rdc/collections/dist_map.hpp"
#include "rdc/collections/team_ops.hpp"
#include "rdc/errors.hpp"
#include "rdc/parallel/accumulator.hpp"
#include "rdc/parallel/parallel.hpp"
#include "rdc/ranges/chunked_list.hpp"
#include "rdc/ranges/long_range.hpp"
#include "rdc/ranges/ranged_list_product.hpp"
#include "rdc/registry/collection_handle.hpp"
#include "rdc/relocation/distribution.hpp"
#include "rdc/relocation/load_balance.hpp"
#include "rdc/relocation/move_manager.hpp"
#include "rdc/rng.hpp"
#include "rdc/runtime/api.hpp"
#include "rdc/runtime/runtime.hpp"

#endif  // RDC_RDC_HPP
