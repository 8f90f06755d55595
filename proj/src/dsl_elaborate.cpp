#include <algorithm>
#include <cctype>
#include <map>
#include <tuple>

#include "mcfsm/dsl.hpp"

namespace mcfsm::dsl {

namespace {

std::string severity_name(Severity s) {
  switch (s) {
    case Severity::Error: return "error";
    case Severity::Warning: return "warning";
    case Severity::Note: return "note";
  }
  return "error";
}

std::string summarize(const std::vector<Diagnostic>& diags) {
  if (diags.empty()) return "DSL error";
  const auto& d = diags.front();
  std::string msg = std::to_string(d.span.line) + ":" + std::to_string(d.span.column) + ": " +
                    d.message;
  if (diags.size() > 1) msg += " (+" + std::to_string(diags.size() - 1) + " more)";
  return msg;
}

bool is_identifier(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s.front()))) return false;
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)); });
}

/// '*' matches any run of characters inside one path segment.
bool glob_match(std::string_view pattern, std::string_view text) {
  std::size_t p = 0, t = 0, star = std::string_view::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (p < pattern.size() && pattern[p] == text[t]) {
      ++p;
      ++t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

std::vector<std::string> split_path(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = text.find('/', start);
    out.emplace_back(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void selector_error(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

}  // namespace

std::string format_diagnostic(const Diagnostic& d, std::string_view file) {
  return std::string(file) + ":" + std::to_string(d.span.line) + ":" +
         std::to_string(d.span.column) + ": " + severity_name(d.severity) + ": " + d.message;
}

DslError::DslError(std::vector<Diagnostic> diagnostics)
    : Error(diagnostics.empty() ? ErrorCode::ParseError : diagnostics.front().code,
            summarize(diagnostics)),
      diagnostics_(std::move(diagnostics)) {}

bool DraftEdge::has_label(std::string_view label) const {
  return std::find(x_labels.begin(), x_labels.end(), label) != x_labels.end() ||
         std::find(y_labels.begin(), y_labels.end(), label) != y_labels.end();
}

Selector classify_selector(std::string_view text) {
  Selector sel{SelectorKind::LocalPath, std::string(text)};
  if (!text.empty() && text.front() == '&') {
    sel.kind = SelectorKind::SemanticRef;
  } else if (text.find('*') != std::string_view::npos) {
    sel.kind = SelectorKind::Glob;
  } else if (text.rfind("../", 0) == 0) {
    sel.kind = SelectorKind::RelativePath;
  } else if (!text.empty() && text.front() == '/') {
    sel.kind = SelectorKind::AbsolutePath;
  }
  return sel;
}

std::vector<SelectorTarget> resolve_selector(const Selector& selector, const Scope& scope,
                                             const DraftModel& draft) {
  std::vector<SelectorTarget> out;
  const std::string& text = selector.text;

  if (selector.kind == SelectorKind::SemanticRef) {
    std::string label = text.substr(1);
    if (!is_identifier(label)) {
      selector_error(ErrorCode::InvalidSelector,
                     "semantic reference '" + text + "' must name a single label");
    }
    if (!scope.instance) {
      selector_error(ErrorCode::InvalidSelector,
                     "semantic reference '" + text + "' is only meaningful inside an instance");
    }
    const auto& inst = draft.instances.at(*scope.instance);
    for (std::size_t e = 0; e < inst.edges.size(); ++e) {
      if (inst.edges[e].has_label(label)) out.push_back({SelectorTarget::Kind::Edge, *scope.instance, e, {}});
    }
    if (out.empty()) {
      selector_error(ErrorCode::UnknownPath,
                     "no edge of '" + inst.name + "' is labelled '" + label + "'");
    }
    return out;
  }

  // Build the absolute segment pattern.
  std::vector<std::string> segments;
  if (!text.empty() && text.front() == '/') {
    segments = split_path(std::string_view(text).substr(1));
  } else {
    std::vector<std::string> base{draft.root};
    if (scope.instance) base.push_back(draft.instances.at(*scope.instance).name);
    std::string_view rest = text;
    while (rest.rfind("../", 0) == 0) {
      if (base.empty()) {
        selector_error(ErrorCode::UnknownPath, "'" + text + "' climbs above the model root");
      }
      base.pop_back();
      rest.remove_prefix(3);
    }
    if (base.empty()) {
      selector_error(ErrorCode::UnknownPath, "'" + text + "' climbs above the model root");
    }
    segments = std::move(base);
    for (auto& s : split_path(rest)) segments.push_back(std::move(s));
  }
  for (const auto& s : segments) {
    if (s.empty() || s == "." || s == "..") {
      selector_error(ErrorCode::InvalidSelector, "malformed path '" + text + "'");
    }
  }
  const bool glob = text.find('*') != std::string::npos;
  const auto missing = [&]() -> Error {
    if (glob) return Error(ErrorCode::EmptyGlobMatch, "glob '" + text + "' matches nothing");
    return Error(ErrorCode::UnknownPath, "'" + text + "' does not name an edge, label or event");
  };

  if (segments.size() > 3) {
    selector_error(ErrorCode::UnsupportedNesting,
                   "'" + text + "' is nested deeper than model/instance/edge");
  }
  if (!glob_match(segments[0], draft.root) || segments.size() == 1) throw missing();

  if (segments.size() == 2) {
    const std::string& leaf = segments[1];
    if (glob) {
      for (const auto& ext : draft.external_events) {
        if (glob_match(leaf, ext.substr(ext.rfind('/') + 1))) {
          out.push_back({SelectorTarget::Kind::External, 0, 0, ext});
        }
      }
    } else if (std::any_of(draft.instances.begin(), draft.instances.end(),
                           [&](const DraftInstance& i) { return i.name == leaf; })) {
      selector_error(ErrorCode::InvalidSelector,
                     "'" + text + "' names an instance, not an edge, label or event");
    } else if (is_identifier(leaf) && leaf.front() == 'x') {
      out.push_back({SelectorTarget::Kind::External, 0, 0, "/" + draft.root + "/" + leaf});
    }
    if (out.empty()) throw missing();
    return out;
  }

  const std::string& inst_pat = segments[1];
  const std::string& leaf = segments[2];
  for (std::size_t i = 0; i < draft.instances.size(); ++i) {
    const auto& inst = draft.instances[i];
    if (!glob_match(inst_pat, inst.name)) continue;
    for (std::size_t e = 0; e < inst.edges.size(); ++e) {
      const auto& edge = inst.edges[e];
      bool hit = glob_match(leaf, edge.hop_name);
      for (const auto* labels : {&edge.x_labels, &edge.y_labels}) {
        for (const auto& l : *labels) hit = hit || glob_match(leaf, l);
      }
      if (hit) out.push_back({SelectorTarget::Kind::Edge, i, e, {}});
    }
  }
  if (out.empty()) throw missing();
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct TemplateEdge {
  std::string src;
  std::string dst;
  std::vector<std::string> labels;
};

struct ClassTemplate {
  std::vector<std::string> states;
  std::vector<TemplateEdge> edges;
  bool ok = true;
};

std::string cap_text(const CapDecl& cap) {
  std::string s = "cap";
  for (const auto& t : cap.targets) s += " " + t.text;
  s += " +=";
  for (const auto& l : cap.labels) s += " " + l.text;
  return s;
}

class Elaborator {
 public:
  Elaborator(const Ast& ast, std::string_view cls) : ast_(ast), cls_name_(cls) {}

  ResolvedModel run() {
    const ClassDecl* decl = ast_.find(cls_name_);
    if (!decl || decl->kind != ClassKind::Mcfsm) {
      error(ErrorCode::UnknownClass, SourceSpan{},
            "no McFSM class named \"" + std::string(cls_name_) + "\"");
      throw DslError(std::move(diags_));
    }
    const McfsmClassDecl& mc = decl->mcfsm;
    builder_.emplace(mc.name);
    draft_.root = mc.name;

    struct PendingCap {
      const CapDecl* cap;
      Scope scope;
    };
    std::vector<PendingCap> caps;

    for (const auto& inst : mc.instances) {
      auto index = declare_instance(inst);
      if (!index) continue;
      for (const auto& cap : inst.caps) caps.push_back({&cap, Scope{*index}});
    }
    for (const auto& cap : mc.caps) caps.push_back({&cap, Scope{}});
    std::stable_sort(caps.begin(), caps.end(), [](const PendingCap& a, const PendingCap& b) {
      return std::tie(a.cap->span.line, a.cap->span.column) <
             std::tie(b.cap->span.line, b.cap->span.column);
    });
    for (const auto& pending : caps) apply_cap(*pending.cap, pending.scope);

    check_determinism();
    if (!diags_.empty()) throw DslError(std::move(diags_));

    try {
      return std::move(*builder_).build();
    } catch (const Error& e) {
      error(e.code(), decl->span(), e.what());
      throw DslError(std::move(diags_));
    }
  }

 private:
  void error(ErrorCode code, SourceSpan span, std::string message) {
    diags_.push_back(Diagnostic{Severity::Error, code, span, std::move(message)});
  }

  const ClassTemplate& class_template(const FsmClassDecl& cls) {
    auto it = templates_.find(cls.name);
    if (it != templates_.end()) return it->second;
    ClassTemplate tpl;
    for (const auto& hop : cls.hops) {
      const std::string& name = hop.name.text;
      auto us = name.find('_');
      if (us == std::string::npos) {
        error(ErrorCode::ParseError, hop.name.span,
              "hop name '" + name + "' must have the form <src>_<dst>");
        tpl.ok = false;
        continue;
      }
      if (name.find('_', us + 1) != std::string::npos) {
        error(ErrorCode::UnderscoreInStateName, hop.name.span,
              "hop name '" + name + "' has more than one underscore; state names cannot contain '_'");
        tpl.ok = false;
        continue;
      }
      std::string src = name.substr(0, us);
      std::string dst = name.substr(us + 1);
      if (!is_identifier(src) || !is_identifier(dst)) {
        error(ErrorCode::ParseError, hop.name.span,
              "hop name '" + name + "' must join two identifiers (letter followed by letters or digits)");
        tpl.ok = false;
        continue;
      }
      std::vector<std::string> labels;
      for (const auto& l : hop.labels) {
        if (!is_identifier(l.text) || (l.text.front() != 'x' && l.text.front() != 'y')) {
          error(ErrorCode::InvalidLabel, l.span,
                "class-level label '" + l.text +
                    "' must be an x- or y-prefixed identifier (paths belong in 'cap')");
          tpl.ok = false;
          continue;
        }
        labels.push_back(l.text);
      }
      for (const auto& s : {src, dst}) {
        if (std::find(tpl.states.begin(), tpl.states.end(), s) == tpl.states.end()) {
          tpl.states.push_back(s);
        }
      }
      auto same = std::find_if(tpl.edges.begin(), tpl.edges.end(), [&](const TemplateEdge& e) {
        return e.src == src && e.dst == dst;
      });
      if (same == tpl.edges.end()) {
        tpl.edges.push_back({src, dst, std::move(labels)});
      } else {
        for (auto& l : labels) same->labels.push_back(std::move(l));
      }
    }
    return templates_.emplace(cls.name, std::move(tpl)).first->second;
  }

  std::optional<std::size_t> declare_instance(const InstanceDecl& inst) {
    const ClassDecl* cls = ast_.find(inst.class_name.text);
    if (!cls) {
      error(ErrorCode::UnknownClass, inst.class_name.span,
            "unknown class '" + inst.class_name.text + "'");
      return std::nullopt;
    }
    if (cls->kind != ClassKind::Fsm) {
      error(ErrorCode::UnsupportedNesting, inst.class_name.span,
            "instance '" + inst.name.text + "' of McFSM class '" + cls->name() +
                "': McFSMs can only contain FSM instances");
      return std::nullopt;
    }
    for (const auto& existing : draft_.instances) {
      if (existing.name == inst.name.text) {
        error(ErrorCode::DuplicateInstance, inst.name.span,
              "duplicate instance '" + inst.name.text + "'");
        return std::nullopt;
      }
    }
    if (!is_identifier(inst.name.text)) {
      error(ErrorCode::ParseError, inst.name.span,
            "instance name '" + inst.name.text + "' is not an identifier");
      return std::nullopt;
    }
    const ClassTemplate& tpl = class_template(cls->fsm);

    MachineIndex m = builder_->add_machine(inst.name.text, cls->name());
    DraftInstance di{inst.name.text, cls->name(), {}};
    for (const auto& s : tpl.states) builder_->add_state(m, s);
    for (const auto& te : tpl.edges) {
      auto src = builder_->add_state(m, te.src);
      auto dst = builder_->add_state(m, te.dst);
      EdgeHandle h = builder_->add_edge(m, src, dst);
      DraftEdge de{te.src + "_" + te.dst, {}, {}};
      for (const auto& l : te.labels) {
        builder_->add_label(h, l);
        auto& bucket = l.front() == 'x' ? de.x_labels : de.y_labels;
        if (std::find(bucket.begin(), bucket.end(), l) == bucket.end()) bucket.push_back(l);
      }
      di.edges.push_back(std::move(de));
    }
    captures_.emplace_back(tpl.edges.size());

    if (!inst.start) {
      error(ErrorCode::MissingStart, inst.span,
            "instance '" + inst.name.text + "' has no 'Start:' state");
    } else if (auto it = std::find(tpl.states.begin(), tpl.states.end(), inst.start->text);
               it == tpl.states.end()) {
      if (tpl.ok) {
        error(ErrorCode::UnknownStartState, inst.start->span,
              "start state '" + inst.start->text + "' is not a state of class '" + cls->name() + "'");
      }
    } else {
      builder_->set_start(m, static_cast<StateIndex>(it - tpl.states.begin()));
    }
    draft_.instances.push_back(std::move(di));
    return draft_.instances.size() - 1;
  }

  void apply_cap(const CapDecl& cap, const Scope& scope) {
    std::vector<SelectorTarget> targets;
    std::vector<SelectorTarget> labels;
    bool failed = false;
    auto resolve_into = [&](const Word& w, std::vector<SelectorTarget>& into) {
      try {
        for (auto& t : resolve_selector(classify_selector(w.text), scope, draft_)) {
          if (std::find(into.begin(), into.end(), t) == into.end()) into.push_back(std::move(t));
        }
      } catch (const Error& e) {
        error(e.code(), w.span, e.what());
        failed = true;
      }
    };
    for (const auto& w : cap.targets) {
      std::size_t before = targets.size();
      resolve_into(w, targets);
      for (std::size_t i = before; i < targets.size(); ++i) {
        if (targets[i].kind != SelectorTarget::Kind::Edge) {
          error(ErrorCode::InvalidCapTarget, w.span,
                "'" + w.text + "' selects an external event; cap targets must be edges");
          failed = true;
        }
      }
    }
    for (const auto& w : cap.labels) resolve_into(w, labels);
    if (failed) return;

    const Provenance origin{cap.span.line, cap.span.column, cap_text(cap)};
    std::vector<CaptureTarget> events;
    for (const auto& l : labels) {
      if (l.kind == SelectorTarget::Kind::External) {
        std::uint32_t idx;
        try {
          idx = builder_->add_external(l.external_path);
        } catch (const Error& e) {
          error(e.code(), cap.span, e.what());
          return;
        }
        if (idx == draft_.external_events.size()) draft_.external_events.push_back(l.external_path);
        events.emplace_back(idx);
      } else {
        events.emplace_back(EdgeHandle{static_cast<MachineIndex>(l.instance),
                                       static_cast<std::uint32_t>(l.edge)});
      }
    }
    for (const auto& t : targets) {
      EdgeHandle h{static_cast<MachineIndex>(t.instance), static_cast<std::uint32_t>(t.edge)};
      for (const auto& ev : events) {
        if (builder_->add_capture(h, ev, origin)) {
          captures_[t.instance][t.edge].push_back({ev, cap.span});
        }
      }
    }
  }

  std::string capture_name(const CaptureTarget& t) const {
    if (const auto* ext = std::get_if<std::uint32_t>(&t)) return draft_.external_events[*ext];
    const auto& h = std::get<EdgeHandle>(t);
    return "/" + draft_.root + "/" + draft_.instances[h.machine].name + "/" +
           draft_.instances[h.machine].edges[h.local].hop_name;
  }

  void check_determinism() {
    for (std::size_t i = 0; i < draft_.instances.size(); ++i) {
      const auto& inst = draft_.instances[i];
      std::map<std::pair<std::string, CaptureTarget>, std::size_t> seen;
      for (std::size_t e = 0; e < inst.edges.size(); ++e) {
        const std::string src = inst.edges[e].hop_name.substr(0, inst.edges[e].hop_name.find('_'));
        for (const auto& [target, span] : captures_[i][e]) {
          auto [it, fresh] = seen.emplace(std::make_pair(src, target), e);
          if (!fresh) {
            error(ErrorCode::NondeterministicState, span,
                  "state '" + src + "' of '" + inst.name + "' has two edges (" +
                      inst.edges[it->second].hop_name + ", " + inst.edges[e].hop_name +
                      ") capturing " + capture_name(target));
          }
        }
      }
    }
  }

  const Ast& ast_;
  std::string_view cls_name_;
  std::optional<ModelBuilder> builder_;
  DraftModel draft_;
  std::map<std::string, ClassTemplate> templates_;
  std::vector<std::vector<std::vector<std::pair<CaptureTarget, SourceSpan>>>> captures_;
  std::vector<Diagnostic> diags_;
};

}  // namespace

ResolvedModel elaborate(const Ast& ast, std::string_view mcfsm_class) {
  return Elaborator(ast, mcfsm_class).run();
}

CompileResult compile(std::string_view source, std::string_view mcfsm_class) {
  CompileResult result;
  try {
    result.model.emplace(elaborate(parse(source), mcfsm_class));
  } catch (const DslError& e) {
    result.diagnostics = e.diagnostics();
  }
  return result;
}

}  // namespace mcfsm::dsl
