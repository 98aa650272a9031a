#include <catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "support/builders.hpp"
#include "support/monte_carlo.hpp"
#include "tapaudit/analyzer.hpp"
#include "tapaudit/errors.hpp"

using Catch::Approx;
using namespace tapaudit;
using namespace tapaudit::testing;

namespace {

const DeviceProfile& iphone13() {
  static const auto reg = DeviceRegistry::load_default();
  return reg.lookup("iPhone 13");
}

std::vector<std::string> detected_paths(const PageSnapshot& s) {
  std::vector<std::string> out;
  for (const auto& d : detect_tappable(s)) out.push_back(d.element->node_path);
  return out;
}

}  // namespace

TEST_CASE("detection by tag", "[detect]") {
  auto s = page({main_frame({element("/button[1]", "button", {0, 0, 50, 50}, 1),
                             element("/div[1]", "div", {0, 60, 50, 50}, 2)})});
  const auto d = detect_tappable(s);
  REQUIRE(d.size() == 1);
  CHECK(d[0].element->node_path == "/button[1]");
  CHECK(d[0].sources.tag);
  CHECK_FALSE(d[0].sources.event_attribute);
}

TEST_CASE("every listed control tag is tappable", "[detect]") {
  std::vector<ElementRecord> els;
  int i = 0;
  for (const char* tag : {"a", "button", "input", "select", "textarea", "label"}) {
    els.push_back(element(std::string("/") + tag + "[1]", tag, {0, 0, 1, 1}, ++i));
  }
  els.push_back(element("/span[1]", "span", {0, 0, 1, 1}, ++i));
  els.push_back(element("/img[1]", "img", {0, 0, 1, 1}, ++i));
  CHECK(detect_tappable(page({main_frame(els)})).size() == 6);
}

TEST_CASE("detection by event attribute", "[detect]") {
  auto div = element("/div[1]", "div", {0, 0, 50, 50}, 1);
  div.attributes = {{"onclick", "go()"}};
  const auto d = detect_tappable(page({main_frame({div})}));
  REQUIRE(d.size() == 1);
  CHECK(d[0].sources.event_attribute);
  CHECK_FALSE(d[0].sources.tag);

  auto onload = element("/div[1]", "div", {0, 0, 50, 50}, 1);
  onload.attributes = {{"onload", "init()"}, {"onerror", "x()"}};
  CHECK(detect_tappable(page({main_frame({onload})})).empty());
}

TEST_CASE("detection by registered listener", "[detect]") {
  auto div = element("/div[1]", "div", {0, 0, 50, 50}, 1);
  div.listener_events = {"touchstart"};
  const auto d = detect_tappable(page({main_frame({div})}));
  REQUIRE(d.size() == 1);
  CHECK(d[0].sources.event_listener);

  for (const char* ev : {"load", "error", "abort", "unload"}) {
    auto only = element("/div[1]", "div", {0, 0, 50, 50}, 1);
    only.listener_events = {ev};
    CHECK(detect_tappable(page({main_frame({only})})).empty());
  }
  auto mixed = element("/div[1]", "div", {0, 0, 50, 50}, 1);
  mixed.listener_events = {"load", "pointerdown"};
  CHECK(detect_tappable(page({main_frame({mixed})})).size() == 1);
}

TEST_CASE("the tappable event set excludes non-user events", "[detect]") {
  const auto& ev = tappable_events();
  for (const char* excluded : {"abort", "error", "load", "unload"}) CHECK_FALSE(ev.contains(excluded));
  for (const char* included : {"click", "touchstart", "pointerup", "keydown", "wheel"}) {
    CHECK(ev.contains(included));
  }
  CHECK(tappable_event_attributes().contains("onclick"));
  CHECK(tappable_event_attributes().size() == ev.size());
}

TEST_CASE("elements in child frames carry every applicable flag", "[detect]") {
  auto btn = element("/button[1]", "button", {0, 0, 50, 50}, 1);
  btn.listener_events = {"click"};
  auto s = page({main_frame(), child_frame("ad", "main", {100, 200, 300, 250}, 4, {btn})});
  const auto d = detect_tappable(s);
  REQUIRE(d.size() == 1);
  CHECK(d[0].sources.tag);
  CHECK(d[0].sources.event_listener);
  CHECK(d[0].sources.iframe_embedded);
  CHECK(d[0].sources.names() ==
        std::vector<std::string>{"tag", "event_listener", "iframe_embedded"});
}

TEST_CASE("malformed snapshots are rejected by detection", "[detect]") {
  CHECK_THROWS_AS(detect_tappable(page({main_frame(), child_frame("x", "nope", {}, 1)})),
                  ValidationError);
}

TEST_CASE("visibility filtering", "[filter]") {
  auto visible = element("/button[1]", "button", {0, 0, 40, 40}, 1);
  auto transparent = element("/button[2]", "button", {0, 50, 40, 40}, 2);
  transparent.visibility.effective_opacity = 0.0;
  auto hidden = element("/button[3]", "button", {0, 100, 40, 40}, 3);
  hidden.visibility.visibility_hidden = true;
  auto undisplayed = element("/button[4]", "button", {0, 0, 0, 0}, 4);
  undisplayed.visibility.displayed = false;
  auto flat = element("/a[1]", "a", {0, 150, 40, 0}, 5);
  auto no_pointer = element("/a[2]", "a", {0, 200, 40, 40}, 6);
  no_pointer.visibility.pointer_events_none = true;
  auto faint = element("/a[3]", "a", {0, 250, 40, 40}, 7);
  faint.visibility.effective_opacity = 0.01;

  auto s = page({main_frame({visible, transparent, hidden, undisplayed, flat, no_pointer, faint})});
  const auto kept = filter_visible(detect_tappable(s), s);
  std::vector<std::string> paths;
  for (const auto& d : kept) paths.push_back(d.element->node_path);
  CHECK(paths == std::vector<std::string>{"/button[1]", "/a[3]"});
}

TEST_CASE("translate_to_page", "[translate]") {
  auto s = page({main_frame({element("/a[1]", "a", {10, 10, 20, 20}, 1)}),
                 child_frame("f", "main", {100, 200, 300, 250}, 2,
                             {element("/a[1]", "a", {5, 5, 20, 20}, 1)}),
                 child_frame("g", "f", {10, 20, 100, 100}, 2,
                             {element("/a[1]", "a", {1, 1, 2, 2}, 1)})});
  const auto& main = s.frames[0];
  const auto& f = s.frames[1];
  const auto& g = s.frames[2];
  const ViewportSize pg = s.page_size_css_px;

  CHECK(translate_to_page(main.elements[0], frame_chain(s, "main"), pg) == PixelRect{10, 10, 20, 20});
  CHECK(translate_to_page(f.elements[0], frame_chain(s, "f"), pg) == PixelRect{105, 205, 20, 20});
  CHECK(translate_to_page(g.elements[0], frame_chain(s, "g"), pg) == PixelRect{111, 221, 2, 2});

  SECTION("clipped at the page bottom and right") {
    auto tall = element("/a[2]", "a", {380, 1150, 40, 100}, 9);
    CHECK(translate_to_page(tall, frame_chain(s, "main"), pg) == PixelRect{380, 1150, 10, 50});
  }
  SECTION("clipped at negative coordinates") {
    auto off = element("/a[2]", "a", {-10, -5, 30, 30}, 9);
    CHECK(translate_to_page(off, frame_chain(s, "main"), pg) == PixelRect{0, 0, 20, 25});
  }
  SECTION("broken chain") {
    std::vector<const FrameRecord*> broken{&main, &g};
    CHECK_THROWS_AS(translate_to_page(g.elements[0], broken, pg), ValidationError);
    std::vector<const FrameRecord*> headless{&f};
    CHECK_THROWS_AS(translate_to_page(f.elements[0], headless, pg), ValidationError);
  }
}

TEST_CASE("elements entirely outside the page are dropped after clipping", "[translate]") {
  auto s = page({main_frame({element("/a[1]", "a", {10, 1300, 40, 40}, 1)})});
  const auto r = analyze(s, iphone13());
  CHECK(r.elements.empty());
}

TEST_CASE("candidate grouping", "[group]") {
  SECTION("disjoint elements are singletons") {
    auto s = page({main_frame({element("/button[1]", "button", {0, 0, 40, 40}, 1),
                               element("/button[2]", "button", {50, 0, 40, 40}, 2)})});
    const auto r = analyze(s, iphone13());
    REQUIRE(r.elements.size() == 2);
    CHECK(r.elements[0].candidate_ids == std::vector<std::string>{"main/button[1]"});
    CHECK(r.elements[1].candidate_ids == std::vector<std::string>{"main/button[2]"});
  }
  SECTION("touching edges do not overlap") {
    auto s = page({main_frame({element("/button[1]", "button", {0, 0, 40, 40}, 1),
                               element("/button[2]", "button", {40, 0, 40, 40}, 2)})});
    const auto r = analyze(s, iphone13());
    CHECK(r.elements[0].candidate_ids.size() == 1);
  }
  SECTION("icon on top of a link") {
    auto link = element("/a[4]", "a", {0, 100, 300, 40}, 1);
    auto icon = element("/a[4]/span[1]", "span", {260, 105, 30, 30}, 2);
    icon.listener_events = {"click"};
    const auto r = analyze(page({main_frame({link, icon})}), iphone13());
    REQUIRE(r.elements.size() == 2);
    const std::vector<std::string> expected{"main/a[4]/span[1]", "main/a[4]"};
    CHECK(r.elements[0].candidate_ids == expected);
    CHECK(r.elements[1].candidate_ids == expected);
  }
  SECTION("three mutually overlapping rects") {
    auto s = page({main_frame({element("/a[1]", "a", {0, 0, 50, 50}, 7),
                               element("/a[2]", "a", {10, 10, 50, 50}, 3),
                               element("/a[3]", "a", {20, 20, 50, 50}, 5)})});
    const auto r = analyze(s, iphone13());
    const std::vector<std::string> expected{"main/a[1]", "main/a[3]", "main/a[2]"};
    for (const auto& e : r.elements) CHECK(e.candidate_ids == expected);
  }
  SECTION("child frame content stacks by its owner iframe") {
    auto under = element("/a[1]", "a", {0, 0, 390, 300}, 2);
    auto over = element("/a[2]", "a", {0, 0, 390, 300}, 9);
    auto ad = element("/button[1]", "button", {0, 0, 100, 50}, 1);
    auto s = page({main_frame({under, over}), child_frame("ad", "main", {0, 100, 300, 250}, 5, {ad})});
    const auto r = analyze(s, iphone13());
    const auto* e = r.find("ad/button[1]");
    REQUIRE(e);
    CHECK(e->candidate_ids == std::vector<std::string>{"main/a[2]", "ad/button[1]", "main/a[1]"});
  }
}

TEST_CASE("candidate relation is symmetric and ordered (brute force)", "[group][property]") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> pos(0, 350);
  std::uniform_real_distribution<double> size(1, 120);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ElementRecord> els;
    std::vector<std::int64_t> orders(25);
    std::iota(orders.begin(), orders.end(), 0);
    std::shuffle(orders.begin(), orders.end(), rng);
    for (int i = 0; i < 25; ++i) {
      els.push_back(element("/a[" + std::to_string(i + 1) + "]", "a",
                            {pos(rng), pos(rng), size(rng), size(rng)}, orders[i]));
    }
    const auto r = analyze(page({main_frame(els)}, 390, 400), iphone13());
    std::map<std::string, const TappableElement*> by_id;
    for (const auto& e : r.elements) by_id[e.element_id] = &e;
    for (const auto& a : r.elements) {
      REQUIRE(std::find(a.candidate_ids.begin(), a.candidate_ids.end(), a.element_id) !=
              a.candidate_ids.end());
      for (const auto& b : r.elements) {
        const bool overlap = &a == &b || intersection_area(a.page_rect, b.page_rect) > 0;
        const bool listed = std::find(a.candidate_ids.begin(), a.candidate_ids.end(),
                                      b.element_id) != a.candidate_ids.end();
        REQUIRE(overlap == listed);
        const bool reverse = std::find(b.candidate_ids.begin(), b.candidate_ids.end(),
                                       a.element_id) != b.candidate_ids.end();
        REQUIRE(listed == reverse);
      }
      for (std::size_t k = 1; k < a.candidate_ids.size(); ++k) {
        REQUIRE(by_id[a.candidate_ids[k - 1]]->paint_rank > by_id[a.candidate_ids[k]]->paint_rank);
      }
    }
  }
}

TEST_CASE("scoring", "[score]") {
  const auto& dev = iphone13();
  SECTION("44 x 44 px on iPhone 13") {
    const auto r = analyze(page({main_frame({element("/button[1]", "button", {0, 0, 44, 44}, 1)})}), dev);
    REQUIRE(r.elements.size() == 1);
    const auto& e = r.elements[0];
    CHECK(e.size_mm.width_mm == Approx(7.289).margin(0.001));
    CHECK(e.size_mm.height_mm == Approx(7.289).margin(0.001));
    CHECK(e.success_rate.value() == Approx(0.9836).margin(5e-4));
    const double mc = monte_carlo_success_rate(e.size_mm.width_mm, e.size_mm.height_mm, 1'000'000, 44);
    CHECK(e.success_rate.value() == Approx(mc).margin(0.005));
  }
  SECTION("7.04 mm square by construction") {
    const double px = mm_to_css_px(7.04, dev);
    const auto r = analyze(page({main_frame({element("/a[1]", "a", {0, 0, px, px}, 1)})}), dev);
    REQUIRE(r.elements.size() == 1);
    CHECK(r.elements[0].size_mm.width_mm == Approx(7.04).epsilon(1e-12));
    CHECK(r.elements[0].success_rate.value() == Approx(0.980).margin(0.002));
  }
  SECTION("zero-area elements never reach scoring") {
    const auto r = analyze(page({main_frame({element("/a[1]", "a", {0, 0, 0, 44}, 1)})}), dev);
    CHECK(r.elements.empty());
  }
}

TEST_CASE("report invariants on random pages", "[analyze][property]") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> pos(-50, 450);
  std::uniform_real_distribution<double> size(0, 150);
  const auto& dev = iphone13();
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ElementRecord> main_els;
    std::vector<ElementRecord> ad_els;
    for (int i = 0; i < 15; ++i) {
      main_els.push_back(element("/a[" + std::to_string(i + 1) + "]", "a",
                                 {pos(rng), pos(rng), size(rng), size(rng)}, i));
      ad_els.push_back(element("/button[" + std::to_string(i + 1) + "]", "button",
                               {pos(rng), pos(rng), size(rng), size(rng)}, i));
    }
    auto s = page({main_frame(main_els), child_frame("ad", "main", {20, 300, 300, 250}, 99, ad_els)},
                  390, 600);
    const auto r = analyze(s, dev);
    for (const auto& e : r.elements) {
      REQUIRE(e.page_rect.has_area());
      REQUIRE(e.page_rect.x >= 0);
      REQUIRE(e.page_rect.y >= 0);
      REQUIRE(e.page_rect.right() <= 390);
      REQUIRE(e.page_rect.bottom() <= 600);
      REQUIRE(e.size_mm.width_mm == css_px_to_mm(e.page_rect.width, dev));
      REQUIRE(e.size_mm.height_mm == css_px_to_mm(e.page_rect.height, dev));
    }
    REQUIRE(serialize_report(analyze(s, dev)) == serialize_report(r));
  }
}

TEST_CASE("analyze on an empty page", "[analyze]") {
  const auto r = analyze(page({main_frame()}), iphone13());
  CHECK(r.elements.empty());
  CHECK(r.url == "https://example.test/");
  CHECK(r.device.name == "iPhone 13");
  CHECK(r.exclusion_rules.size() == exclusion_rules().size());
  CHECK(parse_report(serialize_report(r)) == r);
}

TEST_CASE("analyze reports the failing stage", "[analyze]") {
  try {
    analyze(page({}), iphone13());
    FAIL("expected AnalysisError");
  } catch (const AnalysisError& e) {
    CHECK(e.stage() == "detect");
  }
  ModelCoefficients bad;
  bad.b_x = -1;
  try {
    analyze(page({main_frame()}), iphone13(), bad);
    FAIL("expected AnalysisError");
  } catch (const AnalysisError& e) {
    CHECK(e.stage() == "input");
  }
}

TEST_CASE("reports never contain cookie values", "[analyze]") {
  auto s = page({main_frame({element("/a[1]", "a", {0, 0, 40, 40}, 1)})});
  s.capture_options.cookies = {parse_cookie("sid=TOPSECRET")};
  const auto r = analyze(s, iphone13());
  CHECK(r.options.cookies.empty());
  CHECK(r.options.cookies_supplied());
  CHECK(serialize_report(r).find("TOPSECRET") == std::string::npos);
}

TEST_CASE("format_percent uses two decimals", "[report]") {
  CHECK(format_percent(TapSuccessRate(0.8166)) == "81.66%");
  CHECK(format_percent(TapSuccessRate(0.58)) == "58.00%");
  CHECK(format_percent(TapSuccessRate(1.0)) == "100.00%");
  CHECK(format_percent(TapSuccessRate(0.0)) == "0.00%");
}
