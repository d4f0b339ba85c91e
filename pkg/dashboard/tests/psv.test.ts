import { describe, expect, it } from "vitest";

import { LocalParseError, parseLocalFile } from "../src/psv.js";

const PSV = [
  "HR|O2Sat|Temp|EtCO2|Age|Gender|ICULOS",
  "88|97|36.8|NaN|61.2|1|1",
  "91|NaN|37.1|NaN|61.2|1|2",
].join("\n");

describe("local file parsing", () => {
  it("parses pipe-separated files with NaN as missing", () => {
    const doc = parseLocalFile(PSV, "p42");
    expect(doc.patient_id).toBe("p42");
    expect(doc.iculos).toEqual([1, 2]);
    expect(doc.vitals.HR).toEqual([88, 91]);
    expect(doc.vitals.O2Sat).toEqual([97, null]);
    expect(doc.vitals.EtCO2).toEqual([null, null]);
    expect(doc.demographics.Age).toBe(61.2);
    expect(doc.derived_scores.sirs).toEqual([]); // not computed client-side
  });

  it("parses comma-separated files too", () => {
    const csv = "HR,ICULOS\n80,1\n82,2\n";
    const doc = parseLocalFile(csv, "c1");
    expect(doc.vitals.HR).toEqual([80, 82]);
    expect(doc.iculos).toEqual([1, 2]);
  });

  it("rejects files without an hour column", () => {
    expect(() => parseLocalFile("HR|O2Sat\n80|95\n", "x")).toThrow(LocalParseError);
  });

  it("rejects ragged rows with the line number", () => {
    expect(() => parseLocalFile("HR|ICULOS\n80\n", "x")).toThrow(/line 2/);
  });

  it("rejects empty and non-numeric input", () => {
    expect(() => parseLocalFile("", "x")).toThrow(LocalParseError);
    expect(() => parseLocalFile("HR|ICULOS\nhigh|1\n", "x")).toThrow(/not a number/);
  });
});
