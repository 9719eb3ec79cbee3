#include "dmvcr/embedding.hpp"

#include "dmvcr/errors.hpp"
#include "dmvcr/ops.hpp"

namespace dmvcr {

Tensor embed_tokens(std::span<const std::size_t> ids, const Tensor& table) {
  if (ids.empty()) throw ContractError("embed_tokens: empty sequence");
  return gather_rows(table, ids);
}

}  // namespace dmvcr
