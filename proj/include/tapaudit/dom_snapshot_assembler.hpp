#pragma once

// Converts raw DOMSnapshot.captureSnapshot replies (one per protocol session)
// plus listener lists into the flat FrameRecord list of a PageSnapshot.
// No I/O; the capture module feeds it, tests feed it recorded JSON.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tapaudit/snapshot.hpp"

namespace tapaudit {

// Computed style names requested from the engine, in the order the
// assembler reads them.
const std::vector<std::string>& snapshot_computed_styles();

struct RawFrameTree {
  std::string key;  // protocol session id; unique per tree
  nlohmann::json snapshot;  // {"documents": [...], "strings": [...]}
  // backendNodeId -> registered event types, for every document in the tree.
  std::map<std::int64_t, std::set<std::string>> listeners;
  // Set for out-of-process frames: the session whose document holds the
  // owning <iframe>, and that element's backendNodeId.
  std::optional<std::string> parent_key;
  std::optional<std::int64_t> owner_backend_node_id;
};

struct AssembledFrames {
  std::vector<FrameRecord> frames;  // tree preorder, main frame first
  std::vector<std::string> warnings;
};

// The tree without parent_key is the page. Frame ids are stable across runs:
// "main" for the page, and parent id + owner node path for each frame.
// Throws ValidationError when the input is malformed.
AssembledFrames assemble_frames(const std::vector<RawFrameTree>& trees);

// "scheme://host[:port]" of a URL, lowercase; "null" for opaque URLs.
std::string origin_of(const std::string& url);

}  // namespace tapaudit
