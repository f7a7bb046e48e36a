#include "kernelspace/prelude.hpp"

namespace ks {

namespace {

constexpr std::string_view kPrelude = R"oz(
declare ByNeedRun ForAll New WaitTwo Dis Search FD in

proc {ByNeedRun P X} {P X} end

proc {ForAll Xs P}
   case Xs of nil then skip
   [] X|Xr then {P X} {ForAll Xr P}
   end
end

proc {New C Init O} {C Init O} end

fun {WaitTwo X Y}
   R C in
   {NewCell false C}
   thread Old in {Wait X} {Exchange C Old true} if Old then skip else R=1 end end
   thread Old in {Wait Y} {Exchange C Old true} if Old then skip else R=2 end end
   R
end

local
   fun {Append Xs Ys}
      case Xs of nil then Ys
      [] X|Xr then X|{Append Xr Ys}
      end
   end

   fun {Length Xs}
      case Xs of nil then 0
      [] _|Xr then 1+{Length Xr}
      end
   end

   fun {Nth Xs I}
      case Xs of X|Xr then
         if I==1 then X else {Nth Xr I-1} end
      end
   end

   % spaces for alternatives 1..N, the original space taking the last one
   fun {Branches S I N}
      if I==N then {Commit S N} [S]
      else C={Clone S} in {Commit C I} C|{Branches S I+1 N}
      end
   end

   fun {Survivors Gs Bs}
      case Gs of nil then nil
      [] G|Gr then
         case Bs of B|Br then S={NewSpace G} in
            case {Ask S} of failed then {Survivors Gr Br}
            else (S#B)|{Survivors Gr Br}
            end
         end
      end
   end

   proc {Run S B}
      _={Merge S}
      {B}
   end

   fun {AllOf S}
      case {Ask S}
      of failed then nil
      [] succeeded then [{Merge S}]
      [] alternatives(N) then {AllFrom S 1 N}
      end
   end

   fun {AllFrom S I N}
      if I==N then {Commit S N} {AllOf S}
      else C={Clone S} in
         {Commit S I}
         {Append {AllOf S} {AllFrom C I+1 N}}
      end
   end

   fun {All P} {AllOf {NewSpace P}} end

   fun {DFE S}
      case {Ask S}
      of failed then nil
      [] succeeded then [S]
      [] alternatives(N) then {DFEFrom S 1 N}
      end
   end

   fun {DFEFrom S I N}
      if I==N then {Commit S N} {DFE S}
      else C={Clone S} in
         {Commit S I}
         case {DFE S} of nil then {DFEFrom C I+1 N}
         [] R then R
         end
      end
   end

   fun {One P}
      case {DFE {NewSpace P}} of nil then nil
      [] [S] then [{Merge S}]
      end
   end

   fun {NextOf Stack}
      Old New in
      {Exchange Stack Old New}
      case Old of nil then New=nil nil
      [] S|Rest then
         case {Ask S}
         of failed then New=Rest {NextOf Stack}
         [] succeeded then New=Rest [{Merge S}]
         [] alternatives(N) then New={Append {Branches S 1 N} Rest} {NextOf Stack}
         end
      end
   end

   proc {Object Init O}
      case Init of script(P) then
         Stack Closed in
         {NewCell [{NewSpace P}] Stack}
         {NewCell false Closed}
         proc {O Msg}
            Done in
            {Exchange Closed Done Done}
            if Done then
               raise error(kind:search what:'search object is closed') end
            else
               case Msg
               of next(X) then X={NextOf Stack}
               [] close then D in {Exchange Stack _ nil} {Exchange Closed D true}
               end
            end
         end
      end
   end

   % an earlier bound may already have failed T
   proc {Constrain T Sol Order}
      case {Ask T} of failed then skip
      else {Inject T proc {$ R} {Order Sol R} end}
      end
   end

   fun {BABLoop Stack Best Order}
      case Stack of nil then Best
      [] S|Rest then
         case {Ask S}
         of failed then {BABLoop Rest Best Order}
         [] succeeded then Sol={Merge S} in
            {ForAll Rest proc {$ T} {Constrain T Sol Order} end}
            {BABLoop Rest [Sol] Order}
         [] alternatives(N) then {BABLoop {Append {Branches S 1 N} Rest} Best Order}
         end
      end
   end

   fun {BAB P Order} {BABLoop [{NewSpace P}] nil Order} end

   fun {Decl} X in {FDDecl X} X end

   proc {Distinct Vs} {FDDistinct Vs} end

   proc {Distribute Strategy Vs}
      case {FDSelectFF Vs} of unit then skip
      [] V#M then
         choice V=M [] {FDNeq V M} end
         {Distribute Strategy Vs}
      end
   end
in
   proc {Dis Gs Bs}
      case {Survivors Gs Bs}
      of nil then true=false
      [] [S#B] then {Run S B}
      [] Live then I in
         I={Choose {Length Live}}
         case {Nth Live I} of S#B then {Run S B} end
      end
   end

   Search = search(base:base(all:All one:One) object:Object bab:BAB)
   FD = fd(decl:Decl distinct:Distinct distribute:Distribute)
end
)oz";

}  // namespace

std::string_view prelude_source() { return kPrelude; }

}  // namespace ks
