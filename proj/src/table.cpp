#include <algorithm>
#include <charconv>
#include <sstream>

#include "mcfsm/codegen.hpp"
#include "mcfsm/error.hpp"

namespace mcfsm::codegen {

FlatTable flatten(const ResolvedModel& model) {
  FlatTable t;
  t.model = model.name();
  t.external_count = static_cast<std::uint32_t>(model.external_events().size());
  for (EventId id = 0; id < model.event_count(); ++id) {
    t.events.push_back(model.event_path(model.event_from_id(id)));
  }
  for (MachineIndex m = 0; m < model.machines().size(); ++m) {
    const auto& rm = model.machines()[m];
    FlatMachine fm{rm.name, rm.class_name, rm.states, rm.start, {}};
    for (const auto& edge : model.machine_edges(m)) {
      FlatEdge fe{edge.id.src, edge.id.dst, {}, edge.x_labels, edge.y_labels};
      for (EventRef c : edge.captures) fe.captures.push_back(model.event_id(c));
      std::sort(fe.captures.begin(), fe.captures.end());
      fm.edges.push_back(std::move(fe));
    }
    t.machines.push_back(std::move(fm));
  }
  t.dispatch.assign(model.dispatch_order().begin(), model.dispatch_order().end());
  return t;
}

namespace {

template <class T>
void write_list(std::ostream& out, const std::vector<T>& items) {
  out << ' ' << items.size();
  for (const auto& i : items) out << ' ' << i;
}

}  // namespace

std::string serialize(const FlatTable& t) {
  std::ostringstream out;
  out << kTableMagic << '\n';
  out << "model " << t.model << '\n';
  out << "events " << t.events.size() << ' ' << t.external_count << '\n';
  for (std::size_t i = 0; i < t.events.size(); ++i) {
    out << "event " << i << (i < t.external_count ? " ext " : " int ") << t.events[i] << '\n';
  }
  out << "machines " << t.machines.size() << '\n';
  for (std::size_t m = 0; m < t.machines.size(); ++m) {
    const auto& fm = t.machines[m];
    out << "machine " << m << ' ' << fm.name << ' ' << fm.class_name << '\n';
    out << "states";
    write_list(out, fm.states);
    out << '\n';
    out << "start " << fm.start << '\n';
    out << "edges " << fm.edges.size() << '\n';
    for (const auto& e : fm.edges) {
      out << "edge " << e.src << ' ' << e.dst << " captures";
      write_list(out, e.captures);
      out << " x";
      write_list(out, e.x_labels);
      out << " y";
      write_list(out, e.y_labels);
      out << '\n';
    }
  }
  out << "dispatch";
  write_list(out, t.dispatch);
  out << "\nend\n";
  return out.str();
}

namespace {

class TableReader {
 public:
  explicit TableReader(std::string_view text) {
    std::size_t start = 0;
    while (start < text.size()) {
      auto nl = text.find('\n', start);
      if (nl == std::string_view::npos) nl = text.size();
      lines_.push_back(text.substr(start, nl - start));
      start = nl + 1;
    }
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::InvalidTable, "table line " + std::to_string(line_no_) + ": " + msg);
  }

  /// Next line split into whitespace-separated words.
  std::vector<std::string_view> next(std::string_view keyword) {
    if (cursor_ >= lines_.size()) fail("unexpected end of table, expected '" + std::string(keyword) + "'");
    line_no_ = cursor_ + 1;
    std::string_view line = lines_[cursor_++];
    std::vector<std::string_view> words;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && line[i] == ' ') ++i;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ') ++j;
      if (j > i) words.push_back(line.substr(i, j - i));
      i = j;
    }
    if (words.empty() || words.front() != keyword) fail("expected '" + std::string(keyword) + "'");
    return words;
  }

  std::uint32_t number(std::string_view w) const {
    std::uint32_t v = 0;
    auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc() || p != w.data() + w.size()) fail("expected a number, got '" + std::string(w) + "'");
    return v;
  }

  void expect_words(const std::vector<std::string_view>& words, std::size_t n) const {
    if (words.size() != n) fail("wrong number of fields");
  }

  bool at_magic() {
    line_no_ = 1;
    return !lines_.empty() && lines_[cursor_++] == kTableMagic;
  }

  bool finished() const {
    for (std::size_t i = cursor_; i < lines_.size(); ++i) {
      if (!lines_[i].empty()) return false;
    }
    return true;
  }

 private:
  std::vector<std::string_view> lines_;
  std::size_t cursor_ = 0;
  std::size_t line_no_ = 0;
};

/// Reads "<count> item..." starting at words[pos]; advances pos.
std::vector<std::string> read_list(const TableReader& r, const std::vector<std::string_view>& words,
                                   std::size_t& pos) {
  if (pos >= words.size()) r.fail("missing list length");
  const std::uint32_t n = r.number(words[pos++]);
  if (pos + n > words.size()) r.fail("list shorter than its length");
  std::vector<std::string> out(words.begin() + static_cast<std::ptrdiff_t>(pos),
                               words.begin() + static_cast<std::ptrdiff_t>(pos + n));
  pos += n;
  return out;
}

}  // namespace

FlatTable read_table(std::string_view text) {
  TableReader r(text);
  if (!r.at_magic()) r.fail("missing '" + std::string(kTableMagic) + "' header");
  FlatTable t;
  auto w = r.next("model");
  r.expect_words(w, 2);
  t.model = std::string(w[1]);

  w = r.next("events");
  r.expect_words(w, 3);
  const std::uint32_t event_count = r.number(w[1]);
  t.external_count = r.number(w[2]);
  if (t.external_count > event_count) r.fail("more externals than events");
  for (std::uint32_t i = 0; i < event_count; ++i) {
    w = r.next("event");
    r.expect_words(w, 4);
    if (r.number(w[1]) != i) r.fail("event ids must be dense and ordered");
    if (w[2] != (i < t.external_count ? "ext" : "int")) r.fail("externals must precede internals");
    t.events.emplace_back(w[3]);
  }

  w = r.next("machines");
  r.expect_words(w, 2);
  const std::uint32_t machine_count = r.number(w[1]);
  for (std::uint32_t m = 0; m < machine_count; ++m) {
    FlatMachine fm;
    w = r.next("machine");
    r.expect_words(w, 4);
    if (r.number(w[1]) != m) r.fail("machine ids must be dense and ordered");
    fm.name = std::string(w[2]);
    fm.class_name = std::string(w[3]);
    w = r.next("states");
    std::size_t pos = 1;
    fm.states = read_list(r, w, pos);
    if (pos != w.size()) r.fail("trailing fields");
    w = r.next("start");
    r.expect_words(w, 2);
    fm.start = r.number(w[1]);
    w = r.next("edges");
    r.expect_words(w, 2);
    const std::uint32_t edge_count = r.number(w[1]);
    for (std::uint32_t e = 0; e < edge_count; ++e) {
      w = r.next("edge");
      if (w.size() < 4 || w[3] != "captures") r.fail("malformed edge");
      FlatEdge fe;
      fe.src = r.number(w[1]);
      fe.dst = r.number(w[2]);
      pos = 4;
      for (const auto& c : read_list(r, w, pos)) fe.captures.push_back(r.number(c));
      if (pos >= w.size() || w[pos++] != "x") r.fail("expected 'x'");
      fe.x_labels = read_list(r, w, pos);
      if (pos >= w.size() || w[pos++] != "y") r.fail("expected 'y'");
      fe.y_labels = read_list(r, w, pos);
      if (pos != w.size()) r.fail("trailing fields");
      fm.edges.push_back(std::move(fe));
    }
    t.machines.push_back(std::move(fm));
  }
  w = r.next("dispatch");
  std::size_t pos = 1;
  for (const auto& d : read_list(r, w, pos)) t.dispatch.push_back(r.number(d));
  if (pos != w.size()) r.fail("trailing fields");
  r.next("end");
  if (!r.finished()) r.fail("content after 'end'");
  return t;
}

ResolvedModel to_model(const FlatTable& t) {
  try {
    ModelBuilder b(t.model);
    std::vector<EdgeHandle> edge_of_event;
    for (std::uint32_t i = 0; i < t.external_count; ++i) b.add_external(t.events[i]);
    for (const auto& fm : t.machines) {
      MachineIndex m = b.add_machine(fm.name, fm.class_name);
      for (std::size_t s = 0; s < fm.states.size(); ++s) {
        if (b.add_state(m, fm.states[s]) != s) {
          throw Error(ErrorCode::InvalidTable, "duplicate state in machine '" + fm.name + "'");
        }
      }
      for (const auto& fe : fm.edges) {
        EdgeHandle h = b.add_edge(m, fe.src, fe.dst);
        for (const auto& l : fe.x_labels) b.add_label(h, l);
        for (const auto& l : fe.y_labels) b.add_label(h, l);
        edge_of_event.push_back(h);
      }
      b.set_start(m, fm.start);
    }
    if (t.external_count + edge_of_event.size() != t.events.size()) {
      throw Error(ErrorCode::InvalidTable, "event list does not match the machine blocks");
    }
    for (std::size_t m = 0, g = 0; m < t.machines.size(); ++m) {
      for (const auto& fe : t.machines[m].edges) {
        for (EventId c : fe.captures) {
          if (c >= t.events.size()) throw Error(ErrorCode::InvalidTable, "capture id out of range");
          if (c < t.external_count) {
            b.add_capture(edge_of_event[g], CaptureTarget{c});
          } else {
            b.add_capture(edge_of_event[g], edge_of_event[c - t.external_count]);
          }
        }
        ++g;
      }
    }
    b.set_dispatch_order(std::vector<MachineIndex>(t.dispatch.begin(), t.dispatch.end()));
    ResolvedModel model = std::move(b).build();
    for (EventId id = t.external_count; id < t.events.size(); ++id) {
      if (model.event_path(model.event_from_id(id)) != t.events[id]) {
        throw Error(ErrorCode::InvalidTable, "event " + std::to_string(id) + " is named '" +
                                                 t.events[id] + "' but denotes " +
                                                 model.event_path(model.event_from_id(id)));
      }
    }
    return model;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidTable) throw;
    throw Error(ErrorCode::InvalidTable, e.what());
  }
}

std::string emit_table(const ResolvedModel& model) { return serialize(flatten(model)); }

ResolvedModel parse_table(std::string_view text) { return to_model(read_table(text)); }

}  // namespace mcfsm::codegen
