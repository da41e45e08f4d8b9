"""Error-tolerant syntactic C/C++ grammar.

Lexes and parses single functions (or fragments) without any symbol table,
type checking, or preprocessing, so undeclared identifiers, unknown types,
and macro fragments never destroy expression structure.  Every lexed token
ends up as exactly one leaf of the tree, in source order; regions the parser
cannot understand are wrapped in ``error`` nodes with their tokens kept.
"""

from __future__ import annotations

from dataclasses import dataclass, field


KEYWORDS = frozenset("""
    if else for while do return switch case default break continue goto
    sizeof void char short int long float double signed unsigned bool _Bool
    _Complex const volatile static extern register inline restrict struct
    union enum typedef auto class namespace template typename new delete
    throw try catch public private protected virtual operator using this
    nullptr true false const_cast static_cast dynamic_cast reinterpret_cast
    noexcept constexpr friend explicit mutable union
""".split())

TYPE_KEYWORDS = frozenset("""
    void char short int long float double signed unsigned bool _Bool
    _Complex const volatile static extern register inline restrict struct
    union enum typedef auto typename constexpr
""".split())

# longest-match first
OPERATORS_3 = ("<<=", ">>=", "->*", "...")
OPERATORS_2 = (
    "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "::", ".*",
)
OPERATORS_1 = "+-*/%&|^~!<>=?:;,.()[]{}#"

ASSIGN_OPS = frozenset({"=", "+=", "-=", "*=", "/=", "%=", "<<=", ">>=", "&=", "|=", "^="})

# precedence for binary operators; higher binds tighter
BINARY_PRECEDENCE = {
    "||": 1,
    "&&": 2,
    "|": 3,
    "^": 4,
    "&": 5,
    "==": 6, "!=": 6,
    "<": 7, ">": 7, "<=": 7, ">=": 7,
    "<<": 8, ">>": 8,
    "+": 9, "-": 9,
    "*": 10, "/": 10, "%": 10,
    ".*": 11, "->*": 11,
}

UNARY_PREFIX = frozenset({"+", "-", "!", "~", "&", "*", "++", "--"})

# nesting beyond these caps degrades to flat error nodes instead of recursing
# toward the interpreter's stack limit; each level costs several Python frames
MAX_EXPR_DEPTH = 100
MAX_STMT_DEPTH = 120


@dataclass(frozen=True)
class LexToken:
    text: str
    start: int            # byte offset into the original source
    end: int
    line: int             # 1-based line of the first character
    column: int           # 1-based column of the first character
    kind: str             # identifier | keyword | number | string | char | operator


def lex(code: str) -> list[LexToken]:
    """Tokenize C/C++ source; comments and whitespace are discarded."""
    return lex_with_continuations(code)[0]


def lex_with_continuations(code: str):
    """Tokenize and also report which physical lines continue the previous
    one via a backslash-newline (needed to bound preprocessor directives)."""
    tokens: list[LexToken] = []
    continued: set[int] = set()
    i = 0
    n = len(code)
    line = 1
    line_start = 0

    def newline(pos):
        nonlocal line, line_start
        line += 1
        line_start = pos + 1

    while i < n:
        c = code[i]
        if c == "\n":
            newline(i)
            i += 1
            continue
        if c in " \t\r\f\v":
            i += 1
            continue
        if c == "\\" and i + 1 < n and code[i + 1] == "\n":
            # line continuation: whitespace, but the next line is glued on
            newline(i + 1)
            continued.add(line)
            i += 2
            continue
        if c == "\\" and i + 2 < n and code[i + 1] == "\r" and code[i + 2] == "\n":
            newline(i + 2)
            continued.add(line)
            i += 3
            continue
        if c == "/" and i + 1 < n and code[i + 1] == "/":
            j = code.find("\n", i)
            i = n if j < 0 else j
            continue
        if c == "/" and i + 1 < n and code[i + 1] == "*":
            j = code.find("*/", i + 2)
            if j < 0:
                # unterminated block comment swallows the rest
                for k in range(i, n):
                    if code[k] == "\n":
                        newline(k)
                i = n
            else:
                for k in range(i, j + 2):
                    if code[k] == "\n":
                        newline(k)
                i = j + 2
            continue

        start = i
        start_line = line
        start_col = i - line_start + 1

        def emit(end, kind):
            tokens.append(LexToken(code[start:end], start, end, start_line, start_col, kind))

        # raw string literal: R"tag( ... )tag"
        if c in "uUL" or c == "R":
            m = _match_raw_string(code, i)
            if m is not None:
                emit(m, "string")
                for k in range(start, m):
                    if code[k] == "\n":
                        newline(k)
                i = m
                continue

        if c == '"':
            i = _scan_quoted(code, i, '"')
            emit(i, "string")
            continue
        if c == "'":
            i = _scan_quoted(code, i, "'")
            emit(i, "char")
            continue
        if c.isdigit() or (c == "." and i + 1 < n and code[i + 1].isdigit()):
            i = _scan_number(code, i)
            emit(i, "number")
            continue
        if c.isalpha() or c == "_" or c == "$":
            j = i + 1
            while j < n and (code[j].isalnum() or code[j] in "_$"):
                j += 1
            # string prefixes like u8"..." / L"..."
            if j < n and code[j] in "\"'" and code[i:j] in ("u", "u8", "U", "L"):
                i = _scan_quoted(code, j, code[j])
                emit(i, "string" if code[j] == '"' else "char")
                continue
            text = code[i:j]
            emit(j, "keyword" if text in KEYWORDS else "identifier")
            i = j
            continue

        three = code[i:i + 3]
        if three in OPERATORS_3:
            emit(i + 3, "operator")
            i += 3
            continue
        two = code[i:i + 2]
        if two in OPERATORS_2:
            emit(i + 2, "operator")
            i += 2
            continue
        # any other byte becomes a one-character token so nothing is lost
        emit(i + 1, "operator")
        i += 1

    return tokens, frozenset(continued)


def _scan_quoted(code: str, i: int, quote: str) -> int:
    """Scan a quoted literal starting at ``i``; unterminated stops at newline/EOF."""
    n = len(code)
    j = i + 1
    while j < n:
        c = code[j]
        if c == "\\" and j + 1 < n:
            j += 2
            continue
        if c == quote:
            return j + 1
        if c == "\n":
            return j  # unterminated: keep what we have, newline stays whitespace
        j += 1
    return n


def _scan_number(code: str, i: int) -> int:
    """Scan a numeric literal (int/float/hex/bin, suffixes, C++14 separators)."""
    n = len(code)
    j = i
    while j < n:
        c = code[j]
        if c.isalnum() or c in "_.":
            j += 1
            continue
        if c == "'" and j + 1 < n and code[j + 1].isalnum():
            j += 2
            continue
        if c in "+-" and code[j - 1] in "eEpP" and j - 1 > i:
            j += 1
            continue
        break
    return j


def _match_raw_string(code: str, i: int):
    """Return end offset of a C++ raw string literal at ``i``, or None."""
    n = len(code)
    j = i
    if code[j] in "uUL":
        j += 1
        if j < n and code[j] == "8":
            j += 1
    if j >= n or code[j] != "R":
        return None
    j += 1
    if j >= n or code[j] != '"':
        return None
    j += 1
    tag_start = j
    while j < n and code[j] not in '(")\\\n' and j - tag_start < 16:
        j += 1
    if j >= n or code[j] != "(":
        return None
    tag = code[tag_start:j]
    close = ")" + tag + '"'
    k = code.find(close, j + 1)
    if k < 0:
        return n
    return k + len(close)


# ---------------------------------------------------------------------------
# Parse tree

@dataclass
class Node:
    kind: str
    children: list = field(default_factory=list)
    token_index: int | None = None   # set on leaves only
    # contiguous token range covered by the subtree; filled in one pass after
    # parsing (tokens are consumed strictly left to right)
    first_token: int | None = None
    last_token: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.token_index is not None

    def leaves(self):
        for node in self.walk():
            if node.is_leaf:
                yield node

    def walk(self):
        # iterative preorder: trees from pathological inputs can be deep
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))



STATEMENT_KINDS = frozenset({
    "compound_statement", "expression_statement", "declaration", "if_statement",
    "for_statement", "while_statement", "do_statement", "switch_statement",
    "case_statement", "return_statement", "break_statement", "continue_statement",
    "goto_statement", "labeled_statement", "empty_statement", "preproc_directive",
    "error", "function_definition", "struct_body",
})

# statements whose own trailing ';' terminates them
TERMINATED_STATEMENT_KINDS = frozenset({
    "expression_statement", "declaration", "return_statement", "do_statement",
    "break_statement", "continue_statement", "goto_statement",
})

EXPRESSION_KINDS = frozenset({
    "call_expression", "binary_expression", "unary_expression", "update_expression",
    "subscript_expression", "field_expression", "pointer_expression",
    "assignment_expression", "conditional_expression", "paren_expression",
    "cast_expression", "comma_expression", "initializer_list", "sizeof_expression",
    "scoped_identifier",
})


class _Parser:
    """Single-pass tolerant recursive-descent parser over a token list.

    Tokens are consumed strictly left to right; every token becomes a leaf
    exactly once, which guarantees that the terminal sequence of the tree is
    the lexed token sequence.
    """

    def __init__(self, tokens: list[LexToken], continued_lines=frozenset()):
        self.toks = tokens
        self.continued = continued_lines
        self.i = 0
        self.expr_depth = 0
        self.stmt_depth = 0

    # -- token access -------------------------------------------------------

    def peek(self, ahead: int = 0) -> LexToken | None:
        j = self.i + ahead
        return self.toks[j] if j < len(self.toks) else None

    def at_end(self) -> bool:
        return self.i >= len(self.toks)

    def leaf(self) -> Node:
        tok = self.toks[self.i]
        node = Node(tok.kind, token_index=self.i)
        self.i += 1
        return node

    def take_if(self, text: str, into: Node) -> bool:
        tok = self.peek()
        if tok is not None and tok.text == text:
            into.children.append(self.leaf())
            return True
        return False

    # -- top level -----------------------------------------------------------

    def parse_unit(self) -> Node:
        root = Node("translation_unit")
        while not self.at_end():
            before = self.i
            root.children.append(self.parse_statement())
            if self.i == before:  # safety net; parse_statement always advances
                root.children.append(self.leaf())
        return root

    # -- statements ----------------------------------------------------------

    def parse_statement(self) -> Node:
        if self.stmt_depth > MAX_STMT_DEPTH:
            flat = self._flat_error_expression()
            return flat if flat is not None else Node("error", [self.leaf()])
        self.stmt_depth += 1
        try:
            return self._parse_statement_inner()
        finally:
            self.stmt_depth -= 1

    def _parse_statement_inner(self) -> Node:
        tok = self.peek()
        assert tok is not None
        text = tok.text

        if text == "#" and self._at_line_start():
            return self.parse_preproc()
        if text == "{":
            return self.parse_compound()
        if text == ";":
            node = Node("empty_statement")
            node.children.append(self.leaf())
            return node
        if text == "if":
            return self.parse_if()
        if text == "for":
            return self.parse_for()
        if text == "while":
            return self.parse_while()
        if text == "do":
            return self.parse_do()
        if text == "switch":
            return self.parse_switch()
        if text in ("case", "default"):
            return self.parse_case()
        if text == "return":
            return self.parse_return()
        if text in ("break", "continue"):
            node = Node(f"{text}_statement")
            node.children.append(self.leaf())
            self.take_if(";", node)
            return node
        if text == "goto":
            node = Node("goto_statement")
            node.children.append(self.leaf())
            if self.peek() is not None and self.peek().kind == "identifier":
                node.children.append(self.leaf())
            self.take_if(";", node)
            return node
        if (tok.kind == "identifier" and self.peek(1) is not None
                and self.peek(1).text == ":" and
                (self.peek(2) is None or self.peek(2).text != ":")):
            node = Node("labeled_statement")
            node.children.append(self.leaf())
            node.children.append(self.leaf())
            if not self.at_end() and self.peek().text != "}":
                node.children.append(self.parse_statement())
            return node
        if self._looks_like_declaration():
            return self.parse_declaration()

        return self.parse_expression_statement()

    def _at_line_start(self) -> bool:
        if self.i == 0:
            return True
        return self.toks[self.i].line > self.toks[self.i - 1].line

    def parse_preproc(self) -> Node:
        node = Node("preproc_directive")
        line = self.toks[self.i].line
        node.children.append(self.leaf())  # '#'
        while not self.at_end():
            tok = self.peek()
            while tok.line > line and (line + 1) in self.continued:
                line += 1   # backslash-continued directive spans more lines
            if tok.line != line:
                break
            node.children.append(self.leaf())
        return node

    def parse_compound(self) -> Node:
        node = Node("compound_statement")
        node.children.append(self.leaf())  # '{'
        while not self.at_end() and self.peek().text != "}":
            before = self.i
            node.children.append(self.parse_statement())
            if self.i == before:
                node.children.append(self.leaf())
        self.take_if("}", node)
        return node

    def parse_if(self) -> Node:
        node = Node("if_statement")
        node.children.append(self.leaf())  # 'if'
        self._parse_paren_condition(node)
        if not self.at_end() and self.peek().text not in ("}",):
            node.children.append(self.parse_statement())
        if not self.at_end() and self.peek().text == "else":
            node.children.append(self.leaf())
            if not self.at_end() and self.peek().text not in ("}",):
                node.children.append(self.parse_statement())
        return node

    def parse_while(self) -> Node:
        node = Node("while_statement")
        node.children.append(self.leaf())
        self._parse_paren_condition(node)
        if not self.at_end() and self.peek().text != "}":
            node.children.append(self.parse_statement())
        return node

    def parse_do(self) -> Node:
        node = Node("do_statement")
        node.children.append(self.leaf())
        if not self.at_end() and self.peek().text != "while":
            node.children.append(self.parse_statement())
        if not self.at_end() and self.peek().text == "while":
            node.children.append(self.leaf())
            self._parse_paren_condition(node)
        self.take_if(";", node)
        return node

    def parse_switch(self) -> Node:
        node = Node("switch_statement")
        node.children.append(self.leaf())
        self._parse_paren_condition(node)
        if not self.at_end() and self.peek().text != "}":
            node.children.append(self.parse_statement())
        return node

    def parse_case(self) -> Node:
        node = Node("case_statement")
        node.children.append(self.leaf())  # 'case' | 'default'
        if self.toks[self.i - 1].text == "case":
            expr = self.parse_expression(allow_comma=False)
            if expr is not None:
                node.children.append(expr)
        self.take_if(":", node)
        return node

    def parse_return(self) -> Node:
        node = Node("return_statement")
        node.children.append(self.leaf())
        if not self.at_end() and self.peek().text != ";":
            expr = self.parse_expression(allow_comma=True)
            if expr is not None:
                node.children.append(expr)
        self.take_if(";", node)
        return node

    def _parse_paren_condition(self, node: Node) -> None:
        if not self.take_if("(", node):
            return
        while not self.at_end() and self.peek().text not in (")", "{"):
            before = self.i
            tok = self.peek()
            if tok.text == ";":  # guards inside malformed conditions
                node.children.append(self.leaf())
                continue
            if self._looks_like_declaration():
                node.children.append(self.parse_declaration(stop_at=(")",)))
            else:
                expr = self.parse_expression(allow_comma=True)
                if expr is not None:
                    node.children.append(expr)
            if self.i == before:
                node.children.append(self.leaf())
        self.take_if(")", node)

    def parse_expression_statement(self) -> Node:
        node = Node("expression_statement")
        expr = self.parse_expression(allow_comma=True)
        if expr is None:
            # cannot even start an expression: absorb tokens up to a boundary
            err = Node("error")
            while not self.at_end() and self.peek().text not in (";", "}"):
                err.children.append(self.leaf())
            if not self.at_end() and self.peek().text == ";":
                err.children.append(self.leaf())
            return err
        node.children.append(expr)
        if not self.take_if(";", node):
            # trailing garbage before the terminator is kept as an error child
            if not self.at_end() and self.peek().text not in ("}",):
                err = Node("error")
                while not self.at_end() and self.peek().text not in (";", "}"):
                    err.children.append(self.leaf())
                if err.children:
                    node.children.append(err)
                self.take_if(";", node)
        return node

    # -- declarations ---------------------------------------------------------

    def _looks_like_declaration(self) -> bool:
        tok = self.peek()
        if tok is None:
            return False
        if tok.text in TYPE_KEYWORDS:
            return True
        if tok.kind != "identifier":
            return False
        # identifier identifier ...        -> "mytype x"
        # identifier '*'* identifier [;,=([)]  -> "mytype *x;"
        nxt = self.peek(1)
        if nxt is None:
            return False
        if nxt.kind == "identifier":
            third = self.peek(2)
            # "a b ;" style declaration, but not macro-call-ish "A B(...)"?
            # keep it simple: ident ident is a declaration
            return third is None or third.text != ":"
        j = 1
        stars = 0
        while True:
            t = self.peek(j)
            if t is None:
                return False
            if t.text == "*":
                stars += 1
                j += 1
                continue
            break
        if stars == 0:
            return False
        t = self.peek(j)
        if t is None or t.kind != "identifier":
            return False
        after = self.peek(j + 1)
        return after is not None and after.text in (";", ",", "=", "[", "(", ")")

    def parse_declaration(self, stop_at: tuple = ()) -> Node:
        node = Node("declaration")
        self._parse_specifiers(node)
        saw_params = False
        while not self.at_end():
            decl, had_params = self._parse_declarator(stop_at)
            if decl is not None:
                node.children.append(decl)
                saw_params = saw_params or had_params
            tok = self.peek()
            if tok is None:
                break
            if tok.text == ",":
                node.children.append(self.leaf())
                continue
            if tok.text == ";":
                node.children.append(self.leaf())
                break
            if tok.text == "{" and saw_params:
                node.kind = "function_definition"
                node.children.append(self.parse_compound())
                return node
            if tok.text in stop_at or tok.text == "}":
                break
            # unexpected token: recover up to a safe boundary
            err = Node("error")
            while not self.at_end() and self.peek().text not in (";", "{", "}", ",") + stop_at:
                err.children.append(self.leaf())
            if err.children:
                node.children.append(err)
            if not self.at_end() and self.peek().text == ";":
                node.children.append(self.leaf())
                break
            if not self.at_end() and self.peek().text == ",":
                node.children.append(self.leaf())
                continue
            break
        return node

    def _parse_specifiers(self, node: Node) -> None:
        saw_type_name = False
        while not self.at_end():
            tok = self.peek()
            if tok.text in ("struct", "union", "enum", "class"):
                node.children.append(self._parse_tag_specifier())
                saw_type_name = True
                continue
            if tok.text in TYPE_KEYWORDS:
                node.children.append(self.leaf())
                continue
            if tok.kind == "identifier" and not saw_type_name:
                nxt = self.peek(1)
                if nxt is not None and (nxt.kind == "identifier" or nxt.text in ("*", "&")):
                    node.children.append(self.leaf())
                    saw_type_name = True
                    continue
            break

    def _parse_tag_specifier(self) -> Node:
        node = Node("struct_specifier")
        node.children.append(self.leaf())  # struct/union/enum/class
        if not self.at_end() and self.peek().kind == "identifier":
            node.children.append(self.leaf())
        if not self.at_end() and self.peek().text == "{":
            body = Node("struct_body")
            body.children.append(self.leaf())
            while not self.at_end() and self.peek().text != "}":
                before = self.i
                body.children.append(self.parse_statement())
                if self.i == before:
                    body.children.append(self.leaf())
            self.take_if("}", body)
            node.children.append(body)
        return node

    def _parse_declarator(self, stop_at: tuple):
        """Parse one declarator; returns (node | None, had_param_list)."""
        tok = self.peek()
        if tok is None or tok.text in (";", ",", "{", "}") or tok.text in stop_at:
            return None, False
        node = Node("declarator")
        had_params = False
        while not self.at_end() and self.peek().text in ("*", "&", "const", "volatile", "restrict"):
            node.children.append(self.leaf())
        tok = self.peek()
        if tok is not None and tok.text == "(":
            # parenthesized declarator, e.g. function pointers: ( * name )
            node.children.append(self.leaf())
            inner, inner_params = self._parse_declarator(stop_at=(")",))
            if inner is not None:
                node.children.append(inner)
                had_params = had_params or inner_params
            self.take_if(")", node)
        elif tok is not None and (tok.kind == "identifier" or tok.text == "operator"):
            if tok.text == "operator":
                node.children.append(self.leaf())
                if not self.at_end() and self.peek().kind == "operator" and self.peek().text != "(":
                    node.children.append(self.leaf())
            else:
                node.children.append(self.leaf())
                while (not self.at_end() and self.peek().text == "::"
                       and self.peek(1) is not None and self.peek(1).kind == "identifier"):
                    node.children.append(self.leaf())
                    node.children.append(self.leaf())
        elif tok is not None and tok.text == "~" and self.peek(1) is not None \
                and self.peek(1).kind == "identifier":
            node.children.append(self.leaf())
            node.children.append(self.leaf())
        # suffixes
        while not self.at_end():
            tok = self.peek()
            if tok.text == "[":
                arr = Node("array_declarator")
                arr.children.append(self.leaf())
                if not self.at_end() and self.peek().text != "]":
                    expr = self.parse_expression(allow_comma=False)
                    if expr is not None:
                        arr.children.append(expr)
                self.take_if("]", arr)
                node.children.append(arr)
                continue
            if tok.text == "(":
                node.children.append(self._parse_parameter_list())
                had_params = True
                continue
            if tok.text == "=":
                node.children.append(self.leaf())
                init = self._parse_initializer()
                if init is not None:
                    node.children.append(init)
                continue
            if tok.text in ("const", "noexcept", "override"):
                node.children.append(self.leaf())
                continue
            break
        if not node.children:
            return None, False
        return node, had_params

    def _parse_parameter_list(self) -> Node:
        node = Node("parameter_list")
        node.children.append(self.leaf())  # '('
        while not self.at_end() and self.peek().text != ")":
            before = self.i
            tok = self.peek()
            if tok.text == ",":
                node.children.append(self.leaf())
                continue
            if tok.text == "...":
                node.children.append(self.leaf())
                continue
            param = Node("parameter_declaration")
            self._parse_specifiers(param)
            decl, _ = self._parse_declarator(stop_at=(")", ","))
            if decl is not None:
                param.children.append(decl)
            if param.children:
                node.children.append(param)
            if self.i == before:
                node.children.append(self.leaf())
        self.take_if(")", node)
        return node

    def _parse_initializer(self):
        if not self.at_end() and self.peek().text == "{":
            return self._parse_initializer_list()
        return self.parse_expression(allow_comma=False)

    def _parse_initializer_list(self) -> Node:
        node = Node("initializer_list")
        node.children.append(self.leaf())  # '{'
        while not self.at_end() and self.peek().text != "}":
            before = self.i
            tok = self.peek()
            if tok.text == ",":
                node.children.append(self.leaf())
                continue
            init = self._parse_initializer()
            if init is not None:
                node.children.append(init)
            if self.i == before:
                node.children.append(self.leaf())
        self.take_if("}", node)
        return node

    def parse_for(self) -> Node:
        node = Node("for_statement")
        node.children.append(self.leaf())  # 'for'
        if self.take_if("(", node):
            # init
            if not self.at_end() and self.peek().text == ";":
                node.children.append(self.leaf())
            elif self._looks_like_declaration():
                node.children.append(self.parse_declaration(stop_at=(")", ":")))
                # range-based for: declaration followed by ':'
                if not self.at_end() and self.peek().text == ":":
                    node.children.append(self.leaf())
                    expr = self.parse_expression(allow_comma=True)
                    if expr is not None:
                        node.children.append(expr)
            else:
                expr = self.parse_expression(allow_comma=True)
                if expr is not None:
                    node.children.append(expr)
                self.take_if(";", node)
            # condition
            if not self.at_end() and self.peek().text not in (")",):
                if self.peek().text == ";":
                    node.children.append(self.leaf())
                else:
                    expr = self.parse_expression(allow_comma=True)
                    if expr is not None:
                        node.children.append(expr)
                    self.take_if(";", node)
            # advance clause
            if not self.at_end() and self.peek().text not in (")",):
                expr = self.parse_expression(allow_comma=True)
                if expr is not None:
                    node.children.append(expr)
            while not self.at_end() and self.peek().text not in (")", "{", "}", ";"):
                node.children.append(self.leaf())
            self.take_if(")", node)
        if not self.at_end() and self.peek().text != "}":
            node.children.append(self.parse_statement())
        return node

    # -- expressions -----------------------------------------------------------

    def parse_expression(self, allow_comma: bool):
        node = self.parse_assignment()
        if node is None:
            return None
        while allow_comma and not self.at_end() and self.peek().text == ",":
            comma = Node("comma_expression")
            comma.children.append(node)
            comma.children.append(self.leaf())
            rhs = self.parse_assignment()
            if rhs is not None:
                comma.children.append(rhs)
            node = comma
        return node

    def parse_assignment(self):
        if self.expr_depth > MAX_EXPR_DEPTH:
            return self._flat_error_expression()
        self.expr_depth += 1
        try:
            lhs = self.parse_conditional()
            if lhs is None:
                return None
            tok = self.peek()
            if tok is not None and tok.text in ASSIGN_OPS:
                node = Node("assignment_expression")
                node.children.append(lhs)
                node.children.append(self.leaf())
                rhs = self.parse_assignment()
                if rhs is not None:
                    node.children.append(rhs)
                return node
            return lhs
        finally:
            self.expr_depth -= 1

    def _flat_error_expression(self):
        """Swallow one balanced token run without recursing; used past the
        nesting cap so arbitrarily deep inputs still keep all their tokens."""
        err = Node("error")
        depth = 0
        while not self.at_end():
            text = self.peek().text
            if depth == 0 and text in (";", ",", ")", "]", "}"):
                break
            if text in ("(", "[", "{"):
                depth += 1
            elif text in (")", "]", "}"):
                depth -= 1
            err.children.append(self.leaf())
        if not err.children and not self.at_end():
            err.children.append(self.leaf())
        return err if err.children else None

    def parse_conditional(self):
        cond = self.parse_binary(1)
        if cond is None:
            return None
        tok = self.peek()
        if tok is not None and tok.text == "?":
            node = Node("conditional_expression")
            node.children.append(cond)
            node.children.append(self.leaf())
            then = self.parse_expression(allow_comma=False)
            if then is not None:
                node.children.append(then)
            if self.take_if(":", node):
                els = self.parse_assignment()
                if els is not None:
                    node.children.append(els)
            return node
        return cond

    def parse_binary(self, min_prec: int):
        lhs = self.parse_unary()
        if lhs is None:
            return None
        while True:
            tok = self.peek()
            if tok is None:
                return lhs
            prec = BINARY_PRECEDENCE.get(tok.text)
            if prec is None or prec < min_prec:
                return lhs
            node = Node("binary_expression")
            node.children.append(lhs)
            node.children.append(self.leaf())
            rhs = self.parse_binary(prec + 1)
            if rhs is not None:
                node.children.append(rhs)
            else:
                return node
            lhs = node

    def parse_unary(self):
        tok = self.peek()
        if tok is None:
            return None
        if self.expr_depth > MAX_EXPR_DEPTH:
            return self._flat_error_expression()
        self.expr_depth += 1
        try:
            return self._parse_unary_inner(tok)
        finally:
            self.expr_depth -= 1

    def _parse_unary_inner(self, tok):
        text = tok.text
        if text in ("++", "--"):
            node = Node("update_expression")
            node.children.append(self.leaf())
            operand = self.parse_unary()
            if operand is not None:
                node.children.append(operand)
            return node
        if text == "*":
            node = Node("pointer_expression")
            node.children.append(self.leaf())
            operand = self.parse_unary()
            if operand is not None:
                node.children.append(operand)
            return node
        if text in UNARY_PREFIX:
            node = Node("unary_expression")
            node.children.append(self.leaf())
            operand = self.parse_unary()
            if operand is not None:
                node.children.append(operand)
            return node
        if text == "sizeof":
            node = Node("sizeof_expression")
            node.children.append(self.leaf())
            operand = self.parse_unary()
            if operand is not None:
                node.children.append(operand)
            return node
        if text in ("new", "delete", "throw"):
            node = Node("unary_expression")
            node.children.append(self.leaf())
            if text == "delete" and not self.at_end() and self.peek().text == "[":
                node.children.append(self.leaf())
                self.take_if("]", node)
            operand = self.parse_unary()
            if operand is not None:
                node.children.append(operand)
            return node
        return self.parse_postfix()

    def parse_postfix(self):
        node = self.parse_primary()
        if node is None:
            return None
        while not self.at_end():
            text = self.peek().text
            if text == "(":
                call = Node("call_expression")
                call.children.append(node)
                call.children.append(self.leaf())
                self._parse_call_arguments(call)
                self.take_if(")", call)
                node = call
                continue
            if text == "[":
                sub = Node("subscript_expression")
                sub.children.append(node)
                sub.children.append(self.leaf())
                if not self.at_end() and self.peek().text != "]":
                    expr = self.parse_expression(allow_comma=True)
                    if expr is not None:
                        sub.children.append(expr)
                self.take_if("]", sub)
                node = sub
                continue
            if text in ("->", ".", "->*", ".*"):
                fld = Node("field_expression")
                fld.children.append(node)
                fld.children.append(self.leaf())
                nxt = self.peek()
                if nxt is not None and nxt.kind in ("identifier", "keyword"):
                    fld.children.append(self.leaf())
                node = fld
                continue
            if text in ("++", "--"):
                upd = Node("update_expression")
                upd.children.append(node)
                upd.children.append(self.leaf())
                node = upd
                continue
            if text == "::":
                scoped = Node("scoped_identifier")
                scoped.children.append(node)
                scoped.children.append(self.leaf())
                nxt = self.peek()
                if nxt is not None and nxt.kind in ("identifier", "keyword"):
                    scoped.children.append(self.leaf())
                node = scoped
                continue
            break
        return node

    def _parse_call_arguments(self, call: Node) -> None:
        while not self.at_end() and self.peek().text != ")":
            before = self.i
            if self.peek().text == ",":
                call.children.append(self.leaf())
                continue
            arg = self._parse_initializer()
            if arg is not None:
                call.children.append(arg)
            if self.i == before:
                if self.peek().text in (";", "}"):
                    break
                call.children.append(self.leaf())

    def parse_primary(self):
        tok = self.peek()
        if tok is None:
            return None
        if tok.kind in ("identifier", "number", "string", "char"):
            return self.leaf()
        if tok.text in ("this", "nullptr", "true", "false"):
            return self.leaf()
        if tok.text == "(":
            if self._looks_like_cast():
                node = Node("cast_expression")
                node.children.append(self.leaf())
                depth = 1
                while not self.at_end() and depth > 0:
                    t = self.peek().text
                    if t == "(":
                        depth += 1
                    elif t == ")":
                        depth -= 1
                        if depth == 0:
                            node.children.append(self.leaf())
                            break
                    elif t in (";", "{", "}"):
                        break
                    node.children.append(self.leaf())
                operand = self.parse_unary()
                if operand is not None:
                    node.children.append(operand)
                return node
            node = Node("paren_expression")
            node.children.append(self.leaf())
            inner = self.parse_expression(allow_comma=True)
            if inner is not None:
                node.children.append(inner)
            self.take_if(")", node)
            return node
        if tok.text == "{":
            return self._parse_initializer_list()
        if tok.text == "::" :
            node = Node("scoped_identifier")
            node.children.append(self.leaf())
            if not self.at_end() and self.peek().kind == "identifier":
                node.children.append(self.leaf())
            return node
        if tok.kind == "keyword" and tok.text in TYPE_KEYWORDS:
            # type name used in expression position (e.g. inside sizeof/casts)
            return self.leaf()
        return None

    def _looks_like_cast(self) -> bool:
        nxt = self.peek(1)
        if nxt is None:
            return False
        if nxt.text in TYPE_KEYWORDS and nxt.text not in ("const", "volatile"):
            return True
        if nxt.text in ("const", "volatile", "struct", "union", "enum"):
            return True
        return False


def annotate_token_ranges(root: Node) -> None:
    """Fill first_token/last_token on every node in one bottom-up pass."""
    for node in reversed(list(root.walk())):   # descendants before ancestors
        if node.is_leaf:
            node.first_token = node.last_token = node.token_index
            continue
        for child in node.children:
            if child.first_token is not None:
                node.first_token = child.first_token
                break
        for child in reversed(node.children):
            if child.last_token is not None:
                node.last_token = child.last_token
                break


def parse_tokens(tokens: list[LexToken], continued_lines=frozenset()) -> Node:
    """Build a tolerant parse tree; all tokens appear as leaves in order."""
    parser = _Parser(tokens, continued_lines)
    root = parser.parse_unit()
    annotate_token_ranges(root)
    return root
