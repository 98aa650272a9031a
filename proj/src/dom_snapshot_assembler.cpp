#include "tapaudit/dom_snapshot_assembler.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <regex>

#include "tapaudit/errors.hpp"

namespace tapaudit {

using nlohmann::json;

namespace {

enum Style : std::size_t {
  kOpacity,
  kVisibility,
  kDisplay,
  kPointerEvents,
  kBorderLeft,
  kBorderTop,
  kBorderRight,
  kBorderBottom,
  kPaddingLeft,
  kPaddingTop,
  kPaddingRight,
  kPaddingBottom,
  kStyleCount,
};

constexpr int kElementNode = 1;
constexpr int kFragmentNode = 11;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

double px(const std::string& v) {
  if (v.empty()) return 0.0;
  try {
    return std::stod(v);
  } catch (const std::exception&) {
    return 0.0;
  }
}

struct Doc {
  std::size_t tree = 0;
  std::string origin;
  std::vector<ElementRecord> elements;
  std::map<std::int64_t, std::size_t> node_to_element;
  std::map<std::int64_t, std::int64_t> backend_to_node;
  std::vector<std::pair<std::int64_t, std::size_t>> content_docs;  // owner node -> doc (global index)
  std::map<std::int64_t, PixelRect> content_box;                   // owner node -> content box
  bool referenced = false;
};

class TreeReader {
 public:
  TreeReader(const RawFrameTree& tree, std::size_t tree_index, std::vector<Doc>& out)
      : tree_(tree), tree_index_(tree_index), out_(out) {}

  // Returns the global index of the tree's root document.
  std::size_t read() {
    const json& snap = tree_.snapshot;
    if (!snap.is_object() || !snap.contains("documents") || !snap.contains("strings")) {
      throw ValidationError("snapshot for session '" + tree_.key + "' lacks documents/strings");
    }
    strings_ = &snap.at("strings");
    const auto& docs = snap.at("documents");
    if (!docs.is_array() || docs.empty()) {
      throw ValidationError("snapshot for session '" + tree_.key + "' has no documents");
    }
    const std::size_t base = out_.size();
    out_.resize(base + docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) read_document(docs[i], base, base + i);

    std::optional<std::size_t> root;
    for (std::size_t i = base; i < out_.size(); ++i) {
      if (!out_[i].referenced) {
        if (root) throw ValidationError("session '" + tree_.key + "' has several root documents");
        root = i;
      }
    }
    if (!root) throw ValidationError("session '" + tree_.key + "' has no root document");
    return *root;
  }

 private:
  std::string str(const json& idx) const {
    if (!idx.is_number_integer()) return {};
    const auto i = idx.get<std::int64_t>();
    if (i < 0 || static_cast<std::size_t>(i) >= strings_->size()) return {};
    return (*strings_)[static_cast<std::size_t>(i)].get<std::string>();
  }

  void read_document(const json& d, std::size_t base, std::size_t self) {
    Doc& doc = out_[self];
    doc.tree = tree_index_;
    doc.origin = origin_of(str(d.value("documentURL", json(-1))));

    const json& nodes = d.at("nodes");
    const json& parent = nodes.at("parentIndex");
    const json& type = nodes.at("nodeType");
    const json& name = nodes.at("nodeName");
    const json& backend = nodes.at("backendNodeId");
    static const json kEmpty = json::array();
    const json& attrs = nodes.contains("attributes") ? nodes.at("attributes") : kEmpty;
    const std::size_t n = parent.size();
    if (type.size() != n || name.size() != n || backend.size() != n) {
      throw ValidationError("node arrays of unequal length in session '" + tree_.key + "'");
    }

    const json& layout = d.at("layout");
    const json& lnode = layout.at("nodeIndex");
    const json& lstyles = layout.at("styles");
    const json& lbounds = layout.at("bounds");
    const json& lpaint = layout.contains("paintOrders") ? layout.at("paintOrders") : kEmpty;
    std::vector<std::int64_t> layout_of(n, -1);
    for (std::size_t k = 0; k < lnode.size(); ++k) {
      const auto ni = lnode[k].get<std::int64_t>();
      if (ni < 0 || static_cast<std::size_t>(ni) >= n) {
        throw ValidationError("layout node index out of range in session '" + tree_.key + "'");
      }
      if (layout_of[ni] < 0) layout_of[ni] = static_cast<std::int64_t>(k);
    }

    auto style = [&](std::int64_t k, Style s) -> std::string {
      if (k < 0) return {};
      const json& row = lstyles.at(static_cast<std::size_t>(k));
      return s < row.size() ? str(row[s]) : std::string{};
    };

    std::vector<std::string> path(n);
    std::vector<std::map<std::string, int>> tag_count(n);
    std::vector<double> opacity(n, 1.0);

    struct Pending {
      std::int64_t node;
      std::int64_t layer;
    };
    std::vector<Pending> order;

    for (std::size_t i = 0; i < n; ++i) {
      const auto p = parent[i].get<std::int64_t>();
      if (p >= static_cast<std::int64_t>(i)) {
        throw ValidationError("nodes are not in document order in session '" + tree_.key + "'");
      }
      const int t = type[i].get<int>();
      const std::int64_t k = layout_of[i];
      doc.backend_to_node[backend[i].get<std::int64_t>()] = static_cast<std::int64_t>(i);
      opacity[i] = p >= 0 ? opacity[p] : 1.0;
      if (k >= 0) {
        const std::string o = style(k, kOpacity);
        if (!o.empty()) opacity[i] *= std::clamp(px(o), 0.0, 1.0);
      }

      const std::string nm = str(name[i]);
      if (t == kFragmentNode && p >= 0) {
        path[i] = path[p] + "/#shadow-root";
        continue;
      }
      if (t != kElementNode || p < 0) continue;
      const std::string tag = lower(nm);
      if (tag.empty() || tag[0] == ':' || tag[0] == '<') continue;  // pseudo-elements
      path[i] = path[p] + "/" + tag + "[" + std::to_string(++tag_count[p][tag]) + "]";

      ElementRecord e;
      e.node_path = path[i];
      e.tag = tag;
      if (i < attrs.size()) {
        const json& a = attrs[i];
        for (std::size_t j = 0; j + 1 < a.size(); j += 2) e.attributes[lower(str(a[j]))] = str(a[j + 1]);
      }
      if (auto it = tree_.listeners.find(backend[i].get<std::int64_t>()); it != tree_.listeners.end()) {
        for (const auto& ev : it->second) e.listener_events.insert(lower(ev));
      }
      e.visibility.effective_opacity = opacity[i];
      if (k >= 0) {
        const json& b = lbounds.at(static_cast<std::size_t>(k));
        e.rect = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>()};
        const std::string vis = style(k, kVisibility);
        e.visibility.visibility_hidden = vis == "hidden" || vis == "collapse";
        e.visibility.displayed = style(k, kDisplay) != "none";
        e.visibility.pointer_events_none = style(k, kPointerEvents) == "none";
        const double bl = px(style(k, kBorderLeft)) + px(style(k, kPaddingLeft));
        const double bt = px(style(k, kBorderTop)) + px(style(k, kPaddingTop));
        const double br = px(style(k, kBorderRight)) + px(style(k, kPaddingRight));
        const double bb = px(style(k, kBorderBottom)) + px(style(k, kPaddingBottom));
        doc.content_box[static_cast<std::int64_t>(i)] = {
            e.rect.x + bl, e.rect.y + bt, std::max(0.0, e.rect.width - bl - br),
            std::max(0.0, e.rect.height - bt - bb)};
      } else {
        e.visibility.displayed = false;
      }
      const std::int64_t layer =
          (k >= 0 && static_cast<std::size_t>(k) < lpaint.size()) ? lpaint[k].get<std::int64_t>() : -1;
      order.push_back({static_cast<std::int64_t>(i), layer});
      doc.node_to_element[static_cast<std::int64_t>(i)] = doc.elements.size();
      doc.elements.push_back(std::move(e));
    }

    // Layer paint orders are shared by every element in a layer; break ties
    // by document order so later siblings sit on top, then rank.
    std::vector<std::size_t> idx(order.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return std::tie(order[a].layer, order[a].node) < std::tie(order[b].layer, order[b].node);
    });
    for (std::size_t r = 0; r < idx.size(); ++r) {
      doc.elements[doc.node_to_element[order[idx[r]].node]].paint_order = static_cast<std::int64_t>(r);
    }

    if (nodes.contains("contentDocumentIndex")) {
      const json& rare = nodes.at("contentDocumentIndex");
      const json& owner = rare.at("index");
      const json& target = rare.at("value");
      for (std::size_t j = 0; j < owner.size() && j < target.size(); ++j) {
        const std::size_t child = base + target[j].get<std::size_t>();
        if (child >= out_.size() || child == self) {
          throw ValidationError("bad content document index in session '" + tree_.key + "'");
        }
        out_[child].referenced = true;
        doc.content_docs.emplace_back(owner[j].get<std::int64_t>(), child);
      }
    }
  }

  const RawFrameTree& tree_;
  std::size_t tree_index_;
  std::vector<Doc>& out_;
  const json* strings_ = nullptr;
};

}  // namespace

const std::vector<std::string>& snapshot_computed_styles() {
  static const std::vector<std::string> kStyles{
      "opacity",           "visibility",         "display",          "pointer-events",
      "border-left-width", "border-top-width",   "border-right-width", "border-bottom-width",
      "padding-left",      "padding-top",        "padding-right",    "padding-bottom"};
  return kStyles;
}

std::string origin_of(const std::string& url) {
  static const std::regex re(R"(^([A-Za-z][A-Za-z0-9+.\-]*://[^/?#]*))");
  std::smatch m;
  const std::string l = lower(url);
  if (std::regex_search(l, m, re) && l.rfind("file:", 0) != 0) return m[1].str();
  return "null";
}

AssembledFrames assemble_frames(const std::vector<RawFrameTree>& trees) {
  static_assert(kStyleCount == 12);
  AssembledFrames out;
  std::vector<Doc> docs;
  std::vector<std::size_t> tree_root(trees.size());
  std::map<std::string, std::size_t> tree_by_key;
  std::optional<std::size_t> page;
  try {
    for (std::size_t t = 0; t < trees.size(); ++t) {
      if (!tree_by_key.emplace(trees[t].key, t).second) {
        throw ValidationError("duplicate session '" + trees[t].key + "'");
      }
      tree_root[t] = TreeReader(trees[t], t, docs).read();
      if (!trees[t].parent_key) {
        if (page) throw ValidationError("more than one top-level session");
        page = t;
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed DOM snapshot: ") + e.what());
  }
  if (!page) throw ValidationError("no top-level session");

  // Hang out-of-process trees under their owner elements.
  for (std::size_t t = 0; t < trees.size(); ++t) {
    if (!trees[t].parent_key) continue;
    auto parent = tree_by_key.find(*trees[t].parent_key);
    bool linked = false;
    if (parent != tree_by_key.end() && trees[t].owner_backend_node_id) {
      for (auto& d : docs) {
        if (d.tree != parent->second) continue;
        auto it = d.backend_to_node.find(*trees[t].owner_backend_node_id);
        if (it == d.backend_to_node.end()) continue;
        d.content_docs.emplace_back(it->second, tree_root[t]);
        linked = true;
        break;
      }
    }
    if (!linked) out.warnings.push_back("frame session '" + trees[t].key + "' has no owner element; skipped");
  }

  std::vector<bool> seen(docs.size(), false);
  std::function<void(std::size_t, FrameRecord, const Visibility&)> emit =
      [&](std::size_t di, FrameRecord frame, const Visibility& owner_state) {
        if (seen[di]) throw ValidationError("cyclic frame structure");
        seen[di] = true;
        const Doc& d = docs[di];
        frame.origin = d.origin;
        frame.elements = d.elements;
        // Opacity and hidden state of the owning element carry into the frame.
        for (auto& e : frame.elements) {
          e.visibility.effective_opacity *= owner_state.effective_opacity;
          e.visibility.visibility_hidden = e.visibility.visibility_hidden || owner_state.visibility_hidden;
          e.visibility.displayed = e.visibility.displayed && owner_state.displayed;
          e.visibility.pointer_events_none =
              e.visibility.pointer_events_none || owner_state.pointer_events_none;
        }
        const std::string id = frame.frame_id;
        out.frames.push_back(std::move(frame));
        const std::size_t self = out.frames.size() - 1;

        auto children = d.content_docs;
        std::sort(children.begin(), children.end());
        for (const auto& [owner_node, child] : children) {
          auto el = d.node_to_element.find(owner_node);
          if (el == d.node_to_element.end()) {
            out.warnings.push_back("frame owned by a non-element node in '" + id + "'; skipped");
            continue;
          }
          const ElementRecord owner = out.frames[self].elements[el->second];
          FrameRecord c;
          c.frame_id = id + owner.node_path;
          c.parent_frame_id = id;
          c.owner_paint_order = owner.paint_order;
          if (auto cb = d.content_box.find(owner_node); cb != d.content_box.end()) c.offset = cb->second;
          emit(child, std::move(c), owner.visibility);
        }
      };
  FrameRecord root;
  root.frame_id = "main";
  emit(tree_root[*page], std::move(root), Visibility{});
  return out;
}

}  // namespace tapaudit
