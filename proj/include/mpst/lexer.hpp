// Minimal hand-rolled lexer shared by the type, protocol, and process parsers.
// Tracks line/column for error reporting; `//` comments and CRLF line ends are
// skipped as whitespace.
#pragma once

#include <cctype>
#include <string>

#include "mpst/types.hpp"

namespace mpst::detail {

struct Token {
  enum class Kind { Ident, Int, Str, Punct, Eof } kind = Kind::Eof;
  std::string text;  // identifier text / digits / string body / punctuation
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string src) : src_(std::move(src)) { advance(); }

  const Token& peek() const { return tok_; }

  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

  bool at(const std::string& punct) const {
    return tok_.kind == Token::Kind::Punct && tok_.text == punct;
  }

  bool at_ident(const std::string& word) const {
    return tok_.kind == Token::Kind::Ident && tok_.text == word;
  }

  bool eat(const std::string& punct) {
    if (!at(punct)) return false;
    advance();
    return true;
  }

  bool eat_ident(const std::string& word) {
    if (!at_ident(word)) return false;
    advance();
    return true;
  }

  void expect(const std::string& punct) {
    if (!eat(punct)) fail("expected '" + punct + "'");
  }

  std::string expect_ident(const std::string& what) {
    if (tok_.kind != Token::Kind::Ident) fail("expected " + what);
    return next().text;
  }

  void expect_eof() {
    if (tok_.kind != Token::Kind::Eof) fail("trailing input");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(tok_.line, tok_.col, msg + " (got '" + describe() + "')");
  }

 private:
  std::string describe() const {
    switch (tok_.kind) {
      case Token::Kind::Eof: return "<eof>";
      case Token::Kind::Str: return "\"" + tok_.text + "\"";
      default: return tok_.text;
    }
  }

  char cur() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }

  void bump() {
    if (pos_ >= src_.size()) return;
    if (src_[pos_] == '\n') { line_++; col_ = 1; } else { col_++; }
    pos_++;
  }

  void skip_space() {
    for (;;) {
      while (pos_ < src_.size() && (std::isspace(static_cast<unsigned char>(cur())))) bump();
      if (cur() == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && cur() != '\n') bump();
        continue;
      }
      break;
    }
  }

  void advance() {
    skip_space();
    tok_ = Token{};
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) { tok_.kind = Token::Kind::Eof; return; }
    char c = cur();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string s;
      while (std::isalnum(static_cast<unsigned char>(cur())) || cur() == '_') {
        s += cur();
        bump();
      }
      tok_.kind = Token::Kind::Ident;
      tok_.text = s;
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && pos_ + 1 < src_.size() &&
         std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      std::string s;
      if (cur() == '-') { s += cur(); bump(); }
      while (std::isdigit(static_cast<unsigned char>(cur()))) { s += cur(); bump(); }
      tok_.kind = Token::Kind::Int;
      tok_.text = s;
      return;
    }
    if (c == '"') {
      bump();
      std::string s;
      while (cur() != '"') {
        if (pos_ >= src_.size()) throw ParseError(tok_.line, tok_.col, "unterminated string");
        if (cur() == '\\') bump();
        s += cur();
        bump();
      }
      bump();
      tok_.kind = Token::Kind::Str;
      tok_.text = s;
      return;
    }
    // Multi-char punctuation first.
    static const char* two[] = {"->", "()"};
    for (const char* p : two) {
      if (src_.compare(pos_, 2, p) == 0) {
        tok_.kind = Token::Kind::Punct;
        tok_.text = p;
        bump();
        bump();
        return;
      }
    }
    tok_.kind = Token::Kind::Punct;
    tok_.text = std::string(1, c);
    bump();
  }

  std::string src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

}  // namespace mpst::detail
