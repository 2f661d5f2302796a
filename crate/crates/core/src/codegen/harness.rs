//! Generated test programs: a TDF-file-driven harness that parses trace
//! lines at run time, and a standalone test bench with the trace embedded
//! as constants. Both drive one component package cycle by cycle and print
//! a per-cycle PASS/FAIL report followed by a final verdict.

use std::fmt::Write;

use crate::dtd::{TypeDef, TypeRef, Value};
use crate::trace::ComponentTrace;

use super::emit::{symbols_for_harness, HarnessSymbols};
use super::mangle::ada_words;
use super::{EmitterConfig, IrProgram};

struct HarnessCx<'p> {
    p: &'p IrProgram,
    syms: HarnessSymbols,
    comp: usize,
    instance: usize,
}

impl<'p> HarnessCx<'p> {
    fn new(p: &'p IrProgram, instance_path: &str) -> Result<HarnessCx<'p>, String> {
        let instance = p
            .instance_by_path(instance_path)
            .ok_or_else(|| format!("unknown instance `{instance_path}`"))?;
        Ok(HarnessCx {
            p,
            syms: symbols_for_harness(p, &EmitterConfig::default()),
            comp: p.system.instances[instance].component,
            instance,
        })
    }

    fn comp_pkg(&self) -> &str {
        self.syms.comp_pkg(self.comp)
    }

    fn port_value(&self, port: &str) -> String {
        format!("Self.Ports.{}_Value", self.syms.port_base(self.comp, port))
    }

    fn port_present(&self, port: &str) -> String {
        format!(
            "Self.Ports.{}_Present",
            self.syms.port_base(self.comp, port)
        )
    }

    fn named_types_used(&self) -> Vec<&TypeDef> {
        // all definition types; harnesses link the whole types package anyway
        self.p.types_package.types.iter().collect()
    }

    fn parse_fun(&self, ty: &TypeRef) -> String {
        match ty {
            TypeRef::Int => "Parse_Int".into(),
            TypeRef::Float => "Parse_Float".into(),
            TypeRef::Bool => "Parse_Bool".into(),
            TypeRef::Named(n) => format!("Parse_{}", ada_words(n)),
        }
    }

    fn render_fun(&self, ty: &TypeRef) -> String {
        match ty {
            TypeRef::Int => "Render_Int".into(),
            TypeRef::Float => "Render_Float".into(),
            TypeRef::Bool => "Render_Bool".into(),
            TypeRef::Named(n) => format!("Render_{}", ada_words(n)),
        }
    }

    /// Scalar scanning and rendering helpers shared by both generators.
    fn common_helpers(&self, w: &mut String) {
        let _ = writeln!(
            w,
            "   function Trim (S : String) return String is
   begin
      if S'Length > 0 and then S (S'First) = ' ' then
         return S (S'First + 1 .. S'Last);
      end if;
      return S;
   end Trim;

   function Render_Int (V : Integer) return String is
   begin
      return Trim (Integer'Image (V));
   end Render_Int;

   function Render_Float (V : Float) return String is
   begin
      return Trim (Float'Image (V));
   end Render_Float;

   function Render_Bool (V : Boolean) return String is
   begin
      return (if V then \"true\" else \"false\");
   end Render_Bool;"
        );
        for t in self.named_types_used() {
            let tn = format!(
                "{}.{}",
                self.syms.types_pkg().expect("types package"),
                self.syms.type_name(&t.name)
            );
            let fun = self.render_fun(&TypeRef::Named(t.name.clone()));
            let _ = writeln!(w, "\n   function {fun} (V : {tn}) return String is");
            let _ = writeln!(w, "   begin");
            for c in &t.ctors {
                let is_fun = self.syms.fun_ref(&format!("is_{}", c.name));
                let _ = writeln!(w, "      if {is_fun} (V) then");
                if c.arg_types.is_empty() {
                    let _ = writeln!(w, "         return \"{}\";", c.name);
                } else {
                    let mut parts: Vec<String> = Vec::new();
                    for (i, at) in c.arg_types.iter().enumerate() {
                        let sel_raw = if c.arg_types.len() == 1 {
                            format!("{}Sel", c.name)
                        } else {
                            format!("{}Sel{}", c.name, i + 1)
                        };
                        let sel = self.syms.fun_ref(&sel_raw);
                        parts.push(format!("{} ({sel} (V))", self.render_fun(at)));
                    }
                    let _ = writeln!(
                        w,
                        "         return \"{}(\" & {} & \")\";",
                        c.name,
                        parts.join(" & \",\" & ")
                    );
                }
                let _ = writeln!(w, "      end if;");
            }
            let _ = writeln!(w, "      return \"?\";");
            let _ = writeln!(w, "   end {fun};");
        }
    }

    /// Literal parsing helpers, needed only by the TDF harness.
    fn parse_helpers(&self, w: &mut String) {
        let _ = writeln!(
            w,
            "
   function Parse_Int (S : String) return Integer is
   begin
      return Integer'Value (S);
   end Parse_Int;

   function Parse_Float (S : String) return Float is
   begin
      return Float'Value (S);
   end Parse_Float;

   function Parse_Bool (S : String) return Boolean is
   begin
      return Boolean'Value (S);
   end Parse_Bool;

   function Ident_Of (S : String) return String is
   begin
      for I in S'Range loop
         if S (I) = '(' then
            return S (S'First .. I - 1);
         end if;
      end loop;
      return S;
   end Ident_Of;

   function Args_Of (S : String) return String is
   begin
      for I in S'Range loop
         if S (I) = '(' then
            return S (I + 1 .. S'Last - 1);
         end if;
      end loop;
      return \"\";
   end Args_Of;

   function Nth_Arg (S : String; N : Positive) return String is
      Depth : Natural := 0;
      Count : Positive := 1;
      Start : Positive := S'First;
   begin
      for I in S'Range loop
         if S (I) = '(' then
            Depth := Depth + 1;
         elsif S (I) = ')' then
            Depth := Depth - 1;
         elsif S (I) = ',' and then Depth = 0 then
            if Count = N then
               return S (Start .. I - 1);
            end if;
            Count := Count + 1;
            Start := I + 1;
         end if;
      end loop;
      return S (Start .. S'Last);
   end Nth_Arg;"
        );
        for t in self.named_types_used() {
            let tn = format!(
                "{}.{}",
                self.syms.types_pkg().expect("types package"),
                self.syms.type_name(&t.name)
            );
            let fun = self.parse_fun(&TypeRef::Named(t.name.clone()));
            let _ = writeln!(w, "\n   function {fun} (S : String) return {tn} is");
            let _ = writeln!(w, "   begin");
            for c in &t.ctors {
                let ctor_fun = self.syms.fun_ref(&c.name);
                let _ = writeln!(w, "      if Ident_Of (S) = \"{}\" then", c.name);
                if c.arg_types.is_empty() {
                    let _ = writeln!(w, "         return {ctor_fun};");
                } else {
                    let args: Vec<String> = c
                        .arg_types
                        .iter()
                        .enumerate()
                        .map(|(i, at)| {
                            format!("{} (Nth_Arg (Args_Of (S), {}))", self.parse_fun(at), i + 1)
                        })
                        .collect();
                    let _ = writeln!(w, "         return {ctor_fun} ({});", args.join(", "));
                }
                let _ = writeln!(w, "      end if;");
            }
            let _ = writeln!(
                w,
                "      return {};",
                self.syms
                    .default_expr(&TypeRef::Named(t.name.clone()), self.p)
            );
            let _ = writeln!(w, "   end {fun};");
        }
    }

    /// Declarations holding the one-cycle visibility delay of effectively
    /// delayed output ports.
    fn held_decls(&self, w: &mut String) {
        let comp = &self.p.components[self.comp];
        for port in &comp.out_ports {
            if self.p.out_delay(self.instance, &port.name) {
                let base = self.syms.port_base(self.comp, &port.name);
                match &port.ty {
                    TypeRef::Named(_) => {
                        let _ = writeln!(
                            w,
                            "   Held_{base}_Value : {};",
                            self.syms.ada_type(&port.ty)
                        );
                    }
                    _ => {
                        let _ = writeln!(
                            w,
                            "   Held_{base}_Value : {} := {};",
                            self.syms.ada_type(&port.ty),
                            self.syms.default_expr(&port.ty, self.p)
                        );
                    }
                }
                let _ = writeln!(w, "   Held_{base}_Present : Boolean := False;");
            }
        }
    }

    /// The comparison block run once per cycle, after `Do_Transition`.
    /// Expects `Exp_<P>_Value/Present` for every output port and reports
    /// the first mismatching port of the cycle.
    fn compare_block(&self, w: &mut String, indent: usize) {
        let comp = &self.p.components[self.comp];
        let pad = " ".repeat(indent);
        let _ = writeln!(w, "{pad}{}.Do_Transition (Self);", self.comp_pkg());
        // outputs in name order, matching the conformance runner
        let mut ports: Vec<_> = comp.out_ports.iter().collect();
        ports.sort_by(|a, b| a.name.cmp(&b.name));
        for port in &ports {
            let base = self.syms.port_base(self.comp, &port.name);
            let delayed = self.p.out_delay(self.instance, &port.name);
            let (vis_value, vis_present) = if delayed {
                (format!("Held_{base}_Value"), format!("Held_{base}_Present"))
            } else {
                (self.port_value(&port.name), self.port_present(&port.name))
            };
            let render = self.render_fun(&port.ty);
            let _ = writeln!(w, "{pad}if Cycle_Pass then");
            let _ = writeln!(w, "{pad}   if Exp_{base}_Present then");
            let _ = writeln!(w, "{pad}      if not {vis_present} then");
            let _ = writeln!(
                w,
                "{pad}         Ada.Text_IO.Put_Line (\"CYCLE\" & Cycle_Image & \": FAIL {} expected=\" & {render} (Exp_{base}_Value) & \" actual=ABSENT\");",
                port.name
            );
            let _ = writeln!(w, "{pad}         Cycle_Pass := False;");
            let _ = writeln!(w, "{pad}      elsif {vis_value} /= Exp_{base}_Value then");
            let _ = writeln!(
                w,
                "{pad}         Ada.Text_IO.Put_Line (\"CYCLE\" & Cycle_Image & \": FAIL {} expected=\" & {render} (Exp_{base}_Value) & \" actual=\" & {render} ({vis_value}));",
                port.name
            );
            let _ = writeln!(w, "{pad}         Cycle_Pass := False;");
            let _ = writeln!(w, "{pad}      end if;");
            let _ = writeln!(w, "{pad}   elsif {vis_present} then");
            let _ = writeln!(
                w,
                "{pad}      Ada.Text_IO.Put_Line (\"CYCLE\" & Cycle_Image & \": FAIL {} expected=ABSENT actual=\" & {render} ({vis_value}));",
                port.name
            );
            let _ = writeln!(w, "{pad}      Cycle_Pass := False;");
            let _ = writeln!(w, "{pad}   end if;");
            let _ = writeln!(w, "{pad}end if;");
        }
        // refresh the held values of delayed ports
        for port in &comp.out_ports {
            if self.p.out_delay(self.instance, &port.name) {
                let base = self.syms.port_base(self.comp, &port.name);
                let _ = writeln!(
                    w,
                    "{pad}Held_{base}_Value := {};",
                    self.port_value(&port.name)
                );
                let _ = writeln!(
                    w,
                    "{pad}Held_{base}_Present := {};",
                    self.port_present(&port.name)
                );
            }
        }
        let _ = writeln!(w, "{pad}if Cycle_Pass then");
        let _ = writeln!(
            w,
            "{pad}   Ada.Text_IO.Put_Line (\"CYCLE\" & Cycle_Image & \": PASS\");"
        );
        let _ = writeln!(w, "{pad}else");
        let _ = writeln!(w, "{pad}   All_Pass := False;");
        let _ = writeln!(w, "{pad}end if;");
    }

    fn with_clauses(&self, w: &mut String, command_line: bool) {
        let _ = writeln!(w, "with Ada.Text_IO;");
        if command_line {
            let _ = writeln!(w, "with Ada.Command_Line;");
        }
        if let Some(t) = self.syms.types_pkg() {
            let _ = writeln!(w, "with {t};");
        }
        let _ = writeln!(w, "with {};", self.comp_pkg());
    }
}

/// Generates the TDF-driven harness for one component instance: the program
/// reads the TDF file named on its command line, executes one transition
/// per line, and reports per-cycle verdicts.
pub fn emit_tdf_harness(p: &IrProgram, instance_path: &str) -> Result<(String, String), String> {
    let cx = HarnessCx::new(p, instance_path)?;
    let comp = &p.components[cx.comp];
    let proc_name = format!("{}_Tdf_Harness", ada_words(&comp.name));
    let mut w = String::new();
    cx.with_clauses(&mut w, true);
    let _ = writeln!(w, "\nprocedure {proc_name} is\n");
    let _ = writeln!(w, "   Input : Ada.Text_IO.File_Type;");
    let _ = writeln!(
        w,
        "   Self : {pkg}.Instance_T := {pkg}.Initial;",
        pkg = cx.comp_pkg()
    );
    let _ = writeln!(w, "   Cycle : Integer := 0;");
    let _ = writeln!(w, "   All_Pass : Boolean := True;");
    cx.held_decls(&mut w);
    let _ = writeln!(w);
    cx.common_helpers(&mut w);
    cx.parse_helpers(&mut w);

    // one dispatcher per event marker
    let _ = writeln!(
        w,
        "
   procedure Set_Input (Name : String; Text : String) is
   begin"
    );
    let mut any = false;
    for port in &comp.in_ports {
        let _ = writeln!(w, "      if Name = \"{}\" then", port.name);
        let _ = writeln!(
            w,
            "         {} := {} (Text);",
            cx.port_value(&port.name),
            cx.parse_fun(&port.ty)
        );
        let _ = writeln!(w, "         {} := True;", cx.port_present(&port.name));
        let _ = writeln!(w, "      end if;");
        any = true;
    }
    if !any {
        let _ = writeln!(w, "      null;");
    }
    let _ = writeln!(w, "   end Set_Input;");

    let _ = writeln!(w, "\nbegin");
    let _ = writeln!(
        w,
        "   Ada.Text_IO.Open (Input, Ada.Text_IO.In_File, Ada.Command_Line.Argument (1));"
    );
    let _ = writeln!(w, "   while not Ada.Text_IO.End_Of_File (Input) loop");
    let _ = writeln!(w, "      declare");
    let _ = writeln!(
        w,
        "         Line : constant String := Ada.Text_IO.Get_Line (Input);"
    );
    let _ = writeln!(
        w,
        "         Cycle_Image : constant String := Integer'Image (Cycle);"
    );
    let _ = writeln!(w, "         At_Pos : Positive := Line'First;");
    let _ = writeln!(w, "         Cycle_Pass : Boolean := True;");
    for port in &comp.out_ports {
        let base = cx.syms.port_base(cx.comp, &port.name);
        match &port.ty {
            TypeRef::Named(_) => {
                let _ = writeln!(
                    w,
                    "         Exp_{base}_Value : {};",
                    cx.syms.ada_type(&port.ty)
                );
            }
            _ => {
                let _ = writeln!(
                    w,
                    "         Exp_{base}_Value : {} := {};",
                    cx.syms.ada_type(&port.ty),
                    cx.syms.default_expr(&port.ty, p)
                );
            }
        }
        let _ = writeln!(w, "         Exp_{base}_Present : Boolean := False;");
    }
    // nested so it can write the per-cycle Exp_* locals
    let _ = writeln!(
        w,
        "         procedure Set_Expected (Name : String; Text : String) is"
    );
    let _ = writeln!(w, "         begin");
    if comp.out_ports.is_empty() {
        let _ = writeln!(w, "            null;");
    }
    for port in &comp.out_ports {
        let base = cx.syms.port_base(cx.comp, &port.name);
        let _ = writeln!(w, "            if Name = \"{}\" then", port.name);
        let _ = writeln!(
            w,
            "               Exp_{base}_Value := {} (Text);",
            cx.parse_fun(&port.ty)
        );
        let _ = writeln!(w, "               Exp_{base}_Present := True;");
        let _ = writeln!(w, "            end if;");
    }
    let _ = writeln!(w, "         end Set_Expected;");
    let _ = writeln!(w, "      begin");
    for port in &comp.in_ports {
        let _ = writeln!(w, "         {} := False;", cx.port_present(&port.name));
    }
    for port in &comp.out_ports {
        let _ = writeln!(w, "         {} := False;", cx.port_present(&port.name));
    }
    // line scanning: Name?Text; and Name!Text; events
    let _ = writeln!(
        w,
        "         while At_Pos <= Line'Last loop
            declare
               Mark : Positive := At_Pos;
               Stop : Positive := At_Pos;
            begin
               while Line (Mark) /= '?' and then Line (Mark) /= '!' loop
                  Mark := Mark + 1;
               end loop;
               Stop := Mark + 1;
               while Line (Stop) /= ';' loop
                  Stop := Stop + 1;
               end loop;
               if Line (Mark) = '?' then
                  Set_Input (Line (At_Pos .. Mark - 1), Line (Mark + 1 .. Stop - 1));
               else
                  Set_Expected (Line (At_Pos .. Mark - 1), Line (Mark + 1 .. Stop - 1));
               end if;
               At_Pos := Stop + 1;
            end;
         end loop;"
    );
    cx.compare_block(&mut w, 9);
    let _ = writeln!(w, "      end;");
    let _ = writeln!(w, "      Cycle := Cycle + 1;");
    let _ = writeln!(w, "   end loop;");
    let _ = writeln!(w, "   Ada.Text_IO.Close (Input);");
    let _ = writeln!(
        w,
        "   Ada.Text_IO.Put_Line (\"RESULT: \" & (if All_Pass then \"PASS\" else \"FAIL\"));"
    );
    let _ = writeln!(w, "end {proc_name};");

    Ok((format!("{}.adb", proc_name.to_ascii_lowercase()), w))
}

/// Generates a standalone test bench: the trace is embedded as constants,
/// no file parsing happens at run time.
pub fn emit_testbench(t: &ComponentTrace, p: &IrProgram) -> Result<(String, String), String> {
    let cx = HarnessCx::new(p, &t.component)?;
    let comp = &p.components[cx.comp];
    let proc_name = format!("{}_Testbench", ada_words(&comp.name));
    let file = format!("{}.adb", proc_name.to_ascii_lowercase());
    let mut w = String::new();
    cx.with_clauses(&mut w, false);
    let _ = writeln!(w, "\nprocedure {proc_name} is\n");

    if t.cycles.is_empty() {
        let _ = writeln!(w, "begin");
        let _ = writeln!(w, "   Ada.Text_IO.Put_Line (\"RESULT: PASS\");");
        let _ = writeln!(w, "end {proc_name};");
        return Ok((file, w));
    }

    let _ = writeln!(
        w,
        "   Self : {pkg}.Instance_T := {pkg}.Initial;",
        pkg = cx.comp_pkg()
    );
    let _ = writeln!(w, "   All_Pass : Boolean := True;");
    cx.held_decls(&mut w);
    let _ = writeln!(w);
    cx.common_helpers(&mut w);

    let _ = writeln!(w, "\n   type Cycle_Data is record");
    for port in &comp.in_ports {
        let base = cx.syms.port_base(cx.comp, &port.name);
        let ty = cx.syms.ada_type(&port.ty);
        match &port.ty {
            TypeRef::Named(_) => {
                let _ = writeln!(w, "      In_{base}_Value : {ty};");
            }
            _ => {
                let _ = writeln!(
                    w,
                    "      In_{base}_Value : {ty} := {};",
                    cx.syms.default_expr(&port.ty, p)
                );
            }
        }
        let _ = writeln!(w, "      In_{base}_Present : Boolean := False;");
    }
    for port in &comp.out_ports {
        let base = cx.syms.port_base(cx.comp, &port.name);
        let ty = cx.syms.ada_type(&port.ty);
        match &port.ty {
            TypeRef::Named(_) => {
                let _ = writeln!(w, "      Exp_{base}_Value : {ty};");
            }
            _ => {
                let _ = writeln!(
                    w,
                    "      Exp_{base}_Value : {ty} := {};",
                    cx.syms.default_expr(&port.ty, p)
                );
            }
        }
        let _ = writeln!(w, "      Exp_{base}_Present : Boolean := False;");
    }
    let _ = writeln!(w, "   end record;");
    let _ = writeln!(
        w,
        "\n   Cycles : constant array (0 .. {}) of Cycle_Data :=",
        t.cycles.len() - 1
    );
    let mut rows: Vec<String> = Vec::new();
    for (i, cycle) in t.cycles.iter().enumerate() {
        let mut fields: Vec<String> = Vec::new();
        for port in &comp.in_ports {
            let base = cx.syms.port_base(cx.comp, &port.name);
            if let Some(v) = cycle.inputs.get(&port.name) {
                fields.push(format!("In_{base}_Value => {}", value_ada(&cx, v)));
                fields.push(format!("In_{base}_Present => True"));
            }
        }
        for port in &comp.out_ports {
            let base = cx.syms.port_base(cx.comp, &port.name);
            if let Some(v) = cycle.expected.get(&port.name) {
                fields.push(format!("Exp_{base}_Value => {}", value_ada(&cx, v)));
                fields.push(format!("Exp_{base}_Present => True"));
            }
        }
        let row = if fields.is_empty() {
            "others => <>".to_string()
        } else {
            fields.push("others => <>".to_string());
            fields.join(", ")
        };
        rows.push(format!("      {i} => ({row})"));
    }
    let _ = writeln!(w, "     ({});", rows.join(",\n").trim_start());

    let _ = writeln!(w, "\nbegin");
    let _ = writeln!(w, "   for I in Cycles'Range loop");
    let _ = writeln!(w, "      declare");
    let _ = writeln!(
        w,
        "         Cycle_Image : constant String := Integer'Image (I);"
    );
    let _ = writeln!(w, "         Cycle_Pass : Boolean := True;");
    for port in &comp.out_ports {
        let base = cx.syms.port_base(cx.comp, &port.name);
        let _ = writeln!(
            w,
            "         Exp_{base}_Value : constant {} := Cycles (I).Exp_{base}_Value;",
            cx.syms.ada_type(&port.ty)
        );
        let _ = writeln!(
            w,
            "         Exp_{base}_Present : constant Boolean := Cycles (I).Exp_{base}_Present;"
        );
    }
    let _ = writeln!(w, "      begin");
    for port in &comp.in_ports {
        let base = cx.syms.port_base(cx.comp, &port.name);
        let _ = writeln!(w, "         {} := False;", cx.port_present(&port.name));
        let _ = writeln!(w, "         if Cycles (I).In_{base}_Present then");
        let _ = writeln!(
            w,
            "            {} := Cycles (I).In_{base}_Value;",
            cx.port_value(&port.name)
        );
        let _ = writeln!(w, "            {} := True;", cx.port_present(&port.name));
        let _ = writeln!(w, "         end if;");
    }
    for port in &comp.out_ports {
        let _ = writeln!(w, "         {} := False;", cx.port_present(&port.name));
    }
    cx.compare_block(&mut w, 9);
    let _ = writeln!(w, "      end;");
    let _ = writeln!(w, "   end loop;");
    let _ = writeln!(
        w,
        "   Ada.Text_IO.Put_Line (\"RESULT: \" & (if All_Pass then \"PASS\" else \"FAIL\"));"
    );
    let _ = writeln!(w, "end {proc_name};");
    Ok((file, w))
}

fn value_ada(cx: &HarnessCx, v: &Value) -> String {
    cx.syms.lit(v)
}
