#include <cctype>

#include "mcfsm/dsl.hpp"

namespace mcfsm::dsl {

namespace {

enum class Tok { Word, String, LBrace, RBrace, PlusEq, Newline, End };

struct Token {
  Tok kind;
  std::string text;
  SourceSpan span;
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::Word: return "'" + t.text + "'";
    case Tok::String: return "string \"" + t.text + "\"";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::PlusEq: return "'+='";
    case Tok::Newline: return "end of line";
    case Tok::End: return "end of input";
  }
  return "token";
}

[[noreturn]] void fail(SourceSpan at, const std::string& message) {
  throw DslError({Diagnostic{Severity::Error, ErrorCode::ParseError, at, message}});
}

bool is_word_char(char c) {
  return !std::isspace(static_cast<unsigned char>(c)) && c != '{' && c != '}' && c != '"' &&
         c != '#' && c != '+' && c != '=';
}

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::uint32_t line = 1;
  std::uint32_t col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n = 1) {
    i += n;
    col += static_cast<std::uint32_t>(n);
  };
  while (i < src.size()) {
    const char c = src[i];
    const SourceSpan here{line, col};
    if (c == '\n') {
      out.push_back({Tok::Newline, "", here});
      ++i;
      ++line;
      col = 1;
    } else if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance();
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      advance();
    } else if (c == '{') {
      out.push_back({Tok::LBrace, "{", here});
      advance();
    } else if (c == '}') {
      out.push_back({Tok::RBrace, "}", here});
      advance();
    } else if (c == '+') {
      if (i + 1 >= src.size() || src[i + 1] != '=') fail(here, "expected '+=' after '+'");
      out.push_back({Tok::PlusEq, "+=", here});
      advance(2);
    } else if (c == '"') {
      advance();
      std::size_t start = i;
      while (i < src.size() && src[i] != '"' && src[i] != '\n') advance();
      if (i >= src.size() || src[i] != '"') fail(here, "unterminated string literal");
      out.push_back({Tok::String, std::string(src.substr(start, i - start)), here});
      advance();
    } else if (is_word_char(c)) {
      std::size_t start = i;
      while (i < src.size() && is_word_char(src[i])) advance();
      out.push_back({Tok::Word, std::string(src.substr(start, i - start)), here});
    } else {
      fail(here, std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({Tok::End, "", SourceSpan{line, col}});
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Ast run() {
    Ast ast;
    for (;;) {
      skip_newlines();
      if (peek().kind == Tok::End) break;
      ClassDecl decl = parse_class();
      if (const ClassDecl* prev = ast.find(decl.name())) {
        throw DslError({Diagnostic{Severity::Error, ErrorCode::DuplicateClass, decl.span(),
                                   "class \"" + decl.name() + "\" already declared at line " +
                                       std::to_string(prev->span().line)}});
      }
      ast.classes.push_back(std::move(decl));
    }
    return ast;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  void skip_newlines() {
    while (peek().kind == Tok::Newline) ++pos_;
  }

  [[noreturn]] void expected(const std::string& what) const {
    fail(peek().span, "expected " + what + ", found " + describe(peek()));
  }

  const Token& expect(Tok kind, const std::string& what) {
    if (peek().kind != kind) expected(what);
    return take();
  }

  const Token& expect_word(std::string_view text) {
    if (peek().kind != Tok::Word || peek().text != text) expected("'" + std::string(text) + "'");
    return take();
  }

  void end_statement() {
    if (peek().kind == Tok::End) return;
    expect(Tok::Newline, "end of line");
  }

  static Word word(const Token& t) { return Word{t.text, t.span}; }

  ClassDecl parse_class() {
    const Token& kw = peek();
    ClassDecl decl;
    if (kw.kind == Tok::Word && kw.text == "FSM") {
      decl.kind = ClassKind::Fsm;
    } else if (kw.kind == Tok::Word && kw.text == "McFSM") {
      decl.kind = ClassKind::Mcfsm;
    } else {
      expected("'FSM' or 'McFSM'");
    }
    const SourceSpan span = take().span;
    expect_word("class");
    const Token& name = expect(Tok::String, "class name string");
    if (name.text.empty()) fail(name.span, "class name must not be empty");
    expect(Tok::LBrace, "'{'");
    end_statement();
    if (decl.kind == ClassKind::Fsm) {
      decl.fsm.name = name.text;
      decl.fsm.span = span;
      parse_fsm_body(decl.fsm);
    } else {
      decl.mcfsm.name = name.text;
      decl.mcfsm.span = span;
      parse_mcfsm_body(decl.mcfsm);
    }
    expect(Tok::RBrace, "'}'");
    end_statement();
    return decl;
  }

  void parse_fsm_body(FsmClassDecl& cls) {
    for (;;) {
      skip_newlines();
      if (peek().kind == Tok::RBrace || peek().kind == Tok::End) return;
      HopDecl hop;
      hop.span = expect_word("hop").span;
      hop.name = word(expect(Tok::Word, "hop name"));
      expect(Tok::PlusEq, "'+='");
      while (peek().kind == Tok::Word) hop.labels.push_back(word(take()));
      if (hop.labels.empty()) expected("at least one label");
      end_statement();
      cls.hops.push_back(std::move(hop));
    }
  }

  CapDecl parse_cap() {
    CapDecl cap;
    cap.span = expect_word("cap").span;
    while (peek().kind == Tok::Word) cap.targets.push_back(word(take()));
    if (cap.targets.empty()) expected("edge selector");
    expect(Tok::PlusEq, "'+='");
    while (peek().kind == Tok::Word) cap.labels.push_back(word(take()));
    if (cap.labels.empty()) expected("at least one label");
    end_statement();
    return cap;
  }

  void parse_mcfsm_body(McfsmClassDecl& cls) {
    for (;;) {
      skip_newlines();
      const Token& t = peek();
      if (t.kind == Tok::RBrace || t.kind == Tok::End) return;
      if (t.kind != Tok::Word) expected("instance declaration or 'cap'");
      if (t.text == "cap") {
        cls.caps.push_back(parse_cap());
        continue;
      }
      InstanceDecl inst;
      inst.span = t.span;
      inst.class_name = word(take());
      expect_word("inst");
      inst.name = word(expect(Tok::Word, "instance name"));
      expect(Tok::LBrace, "'{'");
      end_statement();
      parse_instance_body(inst);
      expect(Tok::RBrace, "'}'");
      end_statement();
      cls.instances.push_back(std::move(inst));
    }
  }

  void parse_instance_body(InstanceDecl& inst) {
    for (;;) {
      skip_newlines();
      const Token& t = peek();
      if (t.kind == Tok::RBrace || t.kind == Tok::End) return;
      if (t.kind == Tok::Word && t.text.rfind("Start:", 0) == 0) {
        if (inst.start) fail(t.span, "duplicate 'Start:' in instance '" + inst.name.text + "'");
        const Token& kw = take();
        if (kw.text.size() > 6) {
          inst.start = Word{kw.text.substr(6), SourceSpan{kw.span.line, kw.span.column + 6}};
        } else {
          inst.start = word(expect(Tok::Word, "start state name"));
        }
        end_statement();
      } else if (t.kind == Tok::Word && t.text == "cap") {
        inst.caps.push_back(parse_cap());
      } else {
        expected("'Start:' or 'cap'");
      }
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

const ClassDecl* Ast::find(std::string_view name) const {
  for (const auto& c : classes) {
    if (c.name() == name) return &c;
  }
  return nullptr;
}

std::vector<std::string> Ast::mcfsm_class_names() const {
  std::vector<std::string> out;
  for (const auto& c : classes) {
    if (c.kind == ClassKind::Mcfsm) out.push_back(c.name());
  }
  return out;
}

Ast parse(std::string_view source) { return Parser(lex(source)).run(); }

}  // namespace mcfsm::dsl
